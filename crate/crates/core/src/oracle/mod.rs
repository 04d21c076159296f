//! Checks that share no code with the PDE solvers: a worst-case volatility
//! tree and a seeded path simulator.

mod path;
mod tree;

pub use path::{
    mutual_variation, mutual_variation_of, quadratic_variation, quadratic_variation_of, simulate_path,
    LatticePath, Policy,
};
pub use tree::{tree_expectation, worst_case_k_expectation};
