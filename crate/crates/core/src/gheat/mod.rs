//! Explicit monotone finite differences for the G-heat equation
//!
//! ```text
//! ∂ₜu − G(∂ₓₓu) = 0,   u(0, x) = φ(x)
//! ```
//!
//! so that `u(t, 0) = Ê[φ(B_t)]`. Each step is
//! `uⁱ⁺¹ⱼ = uⁱⱼ + Δt · G(D²uⁱⱼ)` with the three-point second difference.
//! Under `σ̄² Δt / Δx² ≤ ½` every step is a monotone, constant-preserving
//! map, which is what makes the scheme converge to the viscosity solution.
//! The outer nodes carry zero second difference, so they keep their
//! initial values.

mod conditional;

use rayon::prelude::*;

use crate::band::VolatilityBand;
use crate::error::{Error, Result};
use crate::expr::ScalarFunction;
use crate::grid::SpaceTimeGrid;

pub use conditional::{conditional_g_expectation, CylinderPayoff, CylinderTable};

/// Execution knobs shared by the lattice solvers. Results do not depend on
/// `threads`: nodes within a layer are updated independently and no
/// floating-point reduction crosses nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub threads: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { threads: 1 }
    }
}

impl SolverOptions {
    pub(crate) fn pool(&self) -> Option<rayon::ThreadPool> {
        if self.threads <= 1 {
            return None;
        }
        rayon::ThreadPoolBuilder::new().num_threads(self.threads).build().ok()
    }
}

/// Space-time field stored layer by layer. Layer 0 is the datum: the
/// initial value for the G-heat equation, the terminal value for a G-BSDE
/// (whose layers then count time-to-go).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    grid: SpaceTimeGrid,
    u: Vec<f64>,
}

impl FieldSolution {
    pub(crate) fn from_layers(grid: SpaceTimeGrid, u: Vec<f64>) -> Self {
        debug_assert_eq!(u.len(), (grid.nt() + 1) * grid.nodes());
        Self { grid, u }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn layers(&self) -> usize {
        self.grid.nt() + 1
    }

    pub fn layer(&self, i: usize) -> &[f64] {
        let n = self.grid.nodes();
        &self.u[i * n..(i + 1) * n]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.grid.nodes() + j]
    }

    /// `∂ₓu`: central difference inside, one-sided at the two edges.
    pub fn z(&self, i: usize, j: usize) -> f64 {
        gradient(self.layer(i), j, self.grid.dx())
    }

    /// `∂ₓₓu`: three-point difference inside, zero on the edges.
    pub fn curvature(&self, i: usize, j: usize) -> f64 {
        second_difference(self.layer(i), j, 1.0 / (self.grid.dx() * self.grid.dx()))
    }

    /// Value at node `j` and time `t` (layer units), linear in time between
    /// the bracketing layers.
    pub fn at_time(&self, t: f64, j: usize) -> f64 {
        let s = (t / self.grid.dt()).clamp(0.0, self.grid.nt() as f64);
        let i0 = s.floor() as usize;
        let w = s - i0 as f64;
        if i0 >= self.grid.nt() || w == 0.0 {
            return self.value(i0.min(self.grid.nt()), j);
        }
        (1.0 - w) * self.value(i0, j) + w * self.value(i0 + 1, j)
    }

    /// Value at `x = 0` and time `t`.
    pub fn at_origin(&self, t: f64) -> f64 {
        self.at_time(t, self.grid.origin())
    }

    /// Upper bound on how far the frozen edge values can lag an
    /// unconstrained evolution: `Σᵢ Δt · max |G(D²u)|` taken at the nodes
    /// next to each edge. Small values mean the truncated domain is wide
    /// enough.
    pub fn boundary_drift_bound(&self, band: &VolatilityBand) -> f64 {
        let nx = self.grid.nx();
        let dt = self.grid.dt();
        (0..self.grid.nt())
            .map(|i| {
                let l = band.g(self.curvature(i, 1)).abs();
                let r = band.g(self.curvature(i, nx - 1)).abs();
                dt * l.max(r)
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub(crate) fn second_difference(u: &[f64], j: usize, inv_dx2: f64) -> f64 {
    if j == 0 || j + 1 == u.len() {
        0.0
    } else {
        (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_dx2
    }
}

#[inline]
pub(crate) fn gradient(u: &[f64], j: usize, dx: f64) -> f64 {
    let n = u.len();
    if j == 0 {
        (u[1] - u[0]) / dx
    } else if j + 1 == n {
        (u[n - 1] - u[n - 2]) / dx
    } else {
        (u[j + 1] - u[j - 1]) / (2.0 * dx)
    }
}

pub(crate) fn sample(func: &ScalarFunction, grid: &SpaceTimeGrid) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.nodes());
    for (j, x) in grid.xs().into_iter().enumerate() {
        let v = func.eval(x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { layer: 0, node: j });
        }
        out.push(v);
    }
    Ok(out)
}

pub(crate) fn first_non_finite(u: &[f64]) -> Option<usize> {
    u.iter().position(|v| !v.is_finite())
}

/// Advance one layer. Each node only reads `prev`, so the parallel and
/// sequential paths produce identical bits.
fn heat_step(band: &VolatilityBand, prev: &[f64], next: &mut [f64], dt: f64, inv_dx2: f64, pool: Option<&rayon::ThreadPool>) {
    let update = |(j, out): (usize, &mut f64)| {
        *out = prev[j] + dt * band.g(second_difference(prev, j, inv_dx2));
    };
    match pool {
        Some(pool) => pool.install(|| next.par_iter_mut().enumerate().for_each(update)),
        None => next.iter_mut().enumerate().for_each(update),
    }
}

/// March a sampled datum through every layer of `grid`; returns all layers
/// when `keep_all`, else just the first and last.
pub(crate) fn march(
    band: &VolatilityBand,
    datum: Vec<f64>,
    grid: &SpaceTimeGrid,
    opts: &SolverOptions,
    keep_all: bool,
) -> Result<Vec<f64>> {
    band.validate()?;
    grid.check_cfl(band)?;
    let n = grid.nodes();
    if datum.len() != n {
        return Err(Error::GridMismatch(format!("datum has {} samples, grid has {n} nodes", datum.len())));
    }
    let dt = grid.dt();
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let pool = opts.pool();
    let mut all = if keep_all { Vec::with_capacity((grid.nt() + 1) * n) } else { Vec::new() };
    let mut prev = datum;
    let mut next = vec![0.0; n];
    if keep_all {
        all.extend_from_slice(&prev);
    }
    for layer in 1..=grid.nt() {
        heat_step(band, &prev, &mut next, dt, inv_dx2, pool.as_ref());
        if let Some(node) = first_non_finite(&next) {
            return Err(Error::NonFinite { layer, node });
        }
        if keep_all {
            all.extend_from_slice(&next);
        }
        std::mem::swap(&mut prev, &mut next);
    }
    if keep_all {
        Ok(all)
    } else {
        Ok(prev)
    }
}

pub fn solve_g_heat(band: &VolatilityBand, phi: &ScalarFunction, grid: &SpaceTimeGrid) -> Result<FieldSolution> {
    solve_g_heat_with(band, phi, grid, &SolverOptions::default())
}

pub fn solve_g_heat_with(
    band: &VolatilityBand,
    phi: &ScalarFunction,
    grid: &SpaceTimeGrid,
    opts: &SolverOptions,
) -> Result<FieldSolution> {
    let datum = sample(phi, grid)?;
    let u = march(band, datum, grid, opts, true)?;
    Ok(FieldSolution::from_layers(*grid, u))
}

/// `Ê[φ(B_t)]`, read at `x = 0` from the solved field.
pub fn g_expectation(band: &VolatilityBand, phi: &ScalarFunction, t: f64, grid: &SpaceTimeGrid) -> Result<f64> {
    g_expectation_with(band, phi, t, grid, &SolverOptions::default())
}

pub fn g_expectation_with(
    band: &VolatilityBand,
    phi: &ScalarFunction,
    t: f64,
    grid: &SpaceTimeGrid,
    opts: &SolverOptions,
) -> Result<f64> {
    if !(0.0..=grid.horizon() * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "t = {t} outside [0, {}]",
            grid.horizon()
        )));
    }
    Ok(solve_g_heat_with(band, phi, grid, opts)?.at_origin(t))
}
