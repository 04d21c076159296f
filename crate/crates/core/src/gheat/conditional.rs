//! Conditional G-expectation of cylinder functionals
//! `φ(B_{t₁} − B_{t₀}, …, B_{t_m} − B_{t_{m−1}})` with `t₀ = 0`.
//!
//! Conditioning at `t_i` leaves a function of the first `i` increments.
//! It is built innermost first: the last increment is integrated out by
//! one G-heat solve per value of the preceding increments, which are
//! themselves restricted to the space nodes of the grid.

use std::fmt;
use std::sync::Arc;

use super::{march, SolverOptions};
use crate::band::VolatilityBand;
use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;

/// Largest number of increments supported; tables grow as `nodes^(m−1)`.
pub const MAX_INCREMENTS: usize = 3;

/// Default relative threshold for the interpolation residual of a table.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-3;

type Payoff = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CylinderPayoff {
    times: Vec<f64>,
    payoff: Payoff,
}

impl fmt::Debug for CylinderPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylinderPayoff").field("times", &self.times).finish_non_exhaustive()
    }
}

impl CylinderPayoff {
    /// `payoff` receives the `m` increments in order.
    pub fn new(times: Vec<f64>, payoff: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if times.is_empty() || times.len() > MAX_INCREMENTS {
            return Err(Error::InvalidArgument(format!(
                "need 1..={MAX_INCREMENTS} time points, got {}",
                times.len()
            )));
        }
        let mut prev = 0.0;
        for &t in &times {
            if !(t.is_finite() && t > prev) {
                return Err(Error::InvalidArgument(format!("time points must increase from 0, got {times:?}")));
            }
            prev = t;
        }
        Ok(Self { times, payoff: Arc::new(payoff) })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> usize {
        self.times.len()
    }

    fn increment_length(&self, k: usize) -> f64 {
        let start = if k == 0 { 0.0 } else { self.times[k - 1] };
        self.times[k] - start
    }

    pub fn eval(&self, increments: &[f64]) -> f64 {
        (self.payoff)(increments)
    }
}

/// A function of `dims` increments tabulated on the space nodes of a grid,
/// read back by multilinear interpolation (clamped at the edges).
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderTable {
    dims: usize,
    xs: Vec<f64>,
    values: Vec<f64>,
    residual: f64,
}

impl CylinderTable {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Estimated worst-case interpolation error `max |D²ψ| Δx² / 8` over
    /// every axis.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// The value of a table with no arguments.
    pub fn scalar(&self) -> Option<f64> {
        (self.dims == 0).then(|| self.values[0])
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dims {
            return Err(Error::InvalidArgument(format!(
                "table takes {} arguments, got {}",
                self.dims,
                point.len()
            )));
        }
        let n = self.xs.len();
        let x0 = self.xs[0];
        let dx = (self.xs[n - 1] - x0) / (n - 1) as f64;
        let mut cells = Vec::with_capacity(self.dims);
        for &p in point {
            let s = ((p - x0) / dx).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            cells.push((i, s - i as f64));
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dims) {
            let mut w = 1.0;
            let mut idx = 0;
            for (axis, &(i, frac)) in cells.iter().enumerate() {
                let hi = corner >> axis & 1 == 1;
                w *= if hi { frac } else { 1.0 - frac };
                idx = idx * n + i + usize::from(hi);
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        Ok(acc)
    }
}

fn table_residual(values: &[f64], dims: usize, n: usize) -> f64 {
    let mut worst = 0.0f64;
    let stride = |axis: usize| n.pow((dims - 1 - axis) as u32);
    for idx in 0..values.len() {
        for axis in 0..dims {
            let s = stride(axis);
            let coord = idx / s % n;
            if coord == 0 || coord + 1 == n {
                continue;
            }
            let d2 = values[idx + s] - 2.0 * values[idx] + values[idx - s];
            worst = worst.max(d2.abs() / 8.0);
        }
    }
    worst
}

/// `ψ(x₁, …, x_i) = Ê[φ(x₁, …, x_i, B_{t_{i+1}} − B_{t_i}, …)]` on the space
/// nodes of `grid`. Each remaining increment is integrated out with a
/// G-heat solve over the increment's length, reusing the grid's `Δx` and a
/// time step no larger than its `Δt`.
pub fn conditional_g_expectation(
    band: &VolatilityBand,
    payoff: &CylinderPayoff,
    i: usize,
    grid: &SpaceTimeGrid,
) -> Result<CylinderTable> {
    conditional_g_expectation_with(band, payoff, i, grid, DEFAULT_RESIDUAL_TOL)
}

pub fn conditional_g_expectation_with(
    band: &VolatilityBand,
    payoff: &CylinderPayoff,
    i: usize,
    grid: &SpaceTimeGrid,
    residual_tol: f64,
) -> Result<CylinderTable> {
    let m = payoff.increments();
    if i > m {
        return Err(Error::InvalidArgument(format!("conditioning index {i} exceeds {m} increments")));
    }
    band.validate()?;
    grid.check_cfl(band)?;
    let xs = grid.xs();
    let n = xs.len();
    let origin = grid.origin();
    let opts = SolverOptions::default();

    // level m: the payoff itself, tabulated on n^m points
    let mut dims = m;
    let mut values = Vec::with_capacity(n.pow(m as u32));
    let mut point = vec![0.0; m];
    for idx in 0..n.pow(m as u32) {
        let mut rest = idx;
        for axis in (0..m).rev() {
            point[axis] = xs[rest % n];
            rest /= n;
        }
        let v = payoff.eval(&point);
        if !v.is_finite() {
            return Err(Error::NonFinite { layer: 0, node: idx });
        }
        values.push(v);
    }

    while dims > i {
        let sub = grid.with_horizon(payoff.increment_length(dims - 1))?;
        let outer = n.pow(dims as u32 - 1);
        let mut next = Vec::with_capacity(outer);
        for o in 0..outer {
            let datum = values[o * n..(o + 1) * n].to_vec();
            let last = march(band, datum, &sub, &opts, false)?;
            next.push(last[origin]);
        }
        values = next;
        dims -= 1;
    }

    let residual = if dims == 0 { 0.0 } else { table_residual(&values, dims, n) };
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = residual_tol * (1.0 + scale);
    if residual > threshold {
        return Err(Error::GridTooCoarse { residual, threshold });
    }
    Ok(CylinderTable { dims, xs, values, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band21() -> VolatilityBand {
        VolatilityBand::new(1.0, 2.0).unwrap()
    }

    fn grid() -> SpaceTimeGrid {
        SpaceTimeGrid::cfl_matched(&band21(), 1.0, 6.0, 121, 0.5).unwrap()
    }

    #[test]
    fn squared_increment_is_constant() {
        let p = CylinderPayoff::new(vec![0.5, 1.0], |x| x[1] * x[1]).unwrap();
        let table = conditional_g_expectation(&band21(), &p, 1, &grid()).unwrap();
        assert_eq!(table.dims(), 1);
        for x1 in [-2.0, -0.3, 0.0, 1.7] {
            let v = table.eval(&[x1]).unwrap();
            assert!((v - 2.0 * 0.5).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn measurable_payoff_is_itself() {
        let c = -1.5;
        let p = CylinderPayoff::new(vec![0.5, 1.0], move |x| c * x[0]).unwrap();
        let table = conditional_g_expectation(&band21(), &p, 1, &grid()).unwrap();
        for x1 in [-2.0, -0.33, 0.0, 1.7] {
            assert!((table.eval(&[x1]).unwrap() - c * x1).abs() < 1e-12);
        }
    }

    #[test]
    fn product_with_future_increment_vanishes() {
        let p = CylinderPayoff::new(vec![0.4, 1.0], |x| x[0] * x[1]).unwrap();
        let table = conditional_g_expectation(&band21(), &p, 1, &grid()).unwrap();
        assert!(table.values().iter().all(|v| v.abs() < 1e-12));
        // fully unconditional: Ê[x₁ · 0] = 0
        let top = conditional_g_expectation(&band21(), &p, 0, &grid()).unwrap();
        assert!(top.scalar().unwrap().abs() < 1e-12);
    }

    #[test]
    fn conditioning_at_the_end_is_identity() {
        let p = CylinderPayoff::new(vec![1.0], |x| x[0].sin()).unwrap();
        let table = conditional_g_expectation(&band21(), &p, 1, &grid()).unwrap();
        let g = grid();
        for j in [3, 60, 100] {
            assert!((table.eval(&[g.x(j)]).unwrap() - g.x(j).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn tower_property_on_quadratic_sum() {
        // Ê[(x₁ + x₂)²] with both increments convex: σ̄²(t₂)
        let p = CylinderPayoff::new(vec![0.5, 1.0], |x| (x[0] + x[1]).powi(2)).unwrap();
        let v = conditional_g_expectation(&band21(), &p, 0, &grid()).unwrap().scalar().unwrap();
        assert!((v - 2.0).abs() < 1e-2, "{v}");
    }

    #[test]
    fn three_increments() {
        let g = SpaceTimeGrid::cfl_matched(&band21(), 0.5, 5.0, 41, 0.5).unwrap();
        let p = CylinderPayoff::new(vec![0.2, 0.3, 0.5], |x| x[2] * x[2] - x[0] * x[1]).unwrap();
        let t = conditional_g_expectation(&band21(), &p, 1, &g).unwrap();
        // Ê[x₂²... ] : −x₁·Ê[x₂] + σ̄²·0.2 with Ê[±x₂] = 0
        for x1 in [-1.0, 0.0, 0.5] {
            assert!((t.eval(&[x1]).unwrap() - 0.4).abs() < 1e-9);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = SpaceTimeGrid::cfl_matched(&band21(), 1.0, 6.0, 9, 0.5).unwrap();
        let p = CylinderPayoff::new(vec![0.5, 1.0], |x| (5.0 * x[0]).sin() + x[1]).unwrap();
        let err = conditional_g_expectation(&band21(), &p, 1, &g).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }), "{err:?}");
    }

    #[test]
    fn invalid_specs() {
        assert!(CylinderPayoff::new(vec![], |_| 0.0).is_err());
        assert!(CylinderPayoff::new(vec![0.5, 0.5], |_| 0.0).is_err());
        assert!(CylinderPayoff::new(vec![0.1, 0.2, 0.3, 0.4], |_| 0.0).is_err());
        let p = CylinderPayoff::new(vec![1.0], |_| 0.0).unwrap();
        assert!(conditional_g_expectation(&band21(), &p, 2, &grid()).is_err());
        let t = conditional_g_expectation(&band21(), &p, 0, &grid()).unwrap();
        assert!(t.eval(&[1.0]).is_err());
    }
}
