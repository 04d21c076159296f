//! Numerical laboratory for sublinear expectations driven by G-Brownian
//! motion in one dimension.
//!
//! * [`gheat`] solves the G-heat equation `∂ₜu = G(∂ₓₓu)` and evaluates
//!   G-expectations, including conditional ones for cylinder functionals.
//! * [`gbsde`] solves Markovian G-BSDEs backward on a lattice and realizes the
//!   nonlinear expectation `E_{s,t}[Φ(B_t − B_s)]`.
//! * [`oracle`] holds independent checks: a worst-case volatility tree and a
//!   seeded path simulator.
//! * [`convexity`] decides the pointwise G-convexity inequality and runs the
//!   matching Jensen experiments.
//! * [`cli`] drives everything from a JSON config.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod catalog;
pub mod cli;
pub mod convexity;
pub mod error;
pub mod expr;
pub mod gbsde;
pub mod gheat;
pub mod grid;
pub mod oracle;

pub use band::{g_eval, VolatilityBand};
pub use error::{Error, Result};
pub use expr::{eval2, ScalarFunction, TriFunction};
pub use grid::SpaceTimeGrid;
