//! Uniform space-time lattice on `[0, T] × [x_min, x_max]`.

use serde::{Deserialize, Serialize};

use crate::band::VolatilityBand;
use crate::error::{Error, Result};

/// Largest admissible `σ̄² dt / dx²` for the explicit schemes.
pub const MAX_THETA: f64 = 0.5;

/// `nx` counts intervals, so there are `nx + 1` space nodes and
/// `dx = (x_max − x_min) / nx`. The origin must fall exactly on a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    horizon: f64,
    x_min: f64,
    x_max: f64,
    nx: usize,
    nt: usize,
}

impl SpaceTimeGrid {
    pub fn new(horizon: f64, x_min: f64, x_max: f64, nx: usize, nt: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < 0.0 && 0.0 < x_max) {
            return Err(Error::InvalidGrid(format!(
                "need x_min < 0 < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if nx < 3 {
            return Err(Error::InvalidGrid(format!("need nx >= 3 intervals, got {nx}")));
        }
        if nt < 1 {
            return Err(Error::InvalidGrid("need nt >= 1".into()));
        }
        let grid = Self {
            horizon,
            x_min,
            x_max,
            nx,
            nt,
        };
        let dx = grid.dx();
        let j0 = (-x_min / dx).round();
        if (x_min + j0 * dx).abs() > 1e-9 * dx {
            return Err(Error::InvalidGrid(format!(
                "x = 0 is not a grid node for [{x_min}, {x_max}] with {nx} intervals"
            )));
        }
        Ok(grid)
    }

    /// Grid on `[-half_width, half_width]` with `nodes` (odd) space nodes and
    /// the smallest `nt` satisfying `σ̄² dt / dx² <= theta`.
    pub fn cfl_matched(
        band: &VolatilityBand,
        horizon: f64,
        half_width: f64,
        nodes: usize,
        theta: f64,
    ) -> Result<Self> {
        if nodes % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "node count must be odd so that x = 0 is a node, got {nodes}"
            )));
        }
        if !(theta > 0.0 && theta <= MAX_THETA) {
            return Err(Error::InvalidGrid(format!("theta must lie in (0, 1/2], got {theta}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        let nx = nodes.saturating_sub(1);
        let dx = 2.0 * half_width / nx.max(1) as f64;
        let dt_max = theta * dx * dx / band.sigma_max_sq();
        let mut nt = (horizon / dt_max).ceil().max(1.0) as usize;
        while horizon / nt as f64 > dt_max {
            nt += 1;
        }
        Self::new(horizon, -half_width, half_width, nx, nt)
    }

    /// Default domain `[−6σ̄√T, 6σ̄√T]`.
    pub fn default_for(band: &VolatilityBand, horizon: f64, nodes: usize) -> Result<Self> {
        let half = 6.0 * band.sigma_max() * horizon.sqrt();
        Self::cfl_matched(band, horizon, half, nodes, MAX_THETA)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of space intervals.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of time steps.
    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nodes(&self) -> usize {
        self.nx + 1
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.nx {
            self.x_max
        } else {
            self.x_min + j as f64 * self.dx()
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nodes()).map(|j| self.x(j)).collect()
    }

    /// Index of the node at `x = 0`.
    pub fn origin(&self) -> usize {
        (-self.x_min / self.dx()).round() as usize
    }

    /// Nearest node to `x`, clamped to the domain.
    pub fn nearest(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.dx()).round();
        j.clamp(0.0, self.nx as f64) as usize
    }

    /// `σ̄² dt / dx²` for this band.
    pub fn theta(&self, band: &VolatilityBand) -> f64 {
        band.sigma_max_sq() * self.dt() / (self.dx() * self.dx())
    }

    pub fn check_cfl(&self, band: &VolatilityBand) -> Result<()> {
        let dx = self.dx();
        let limit = MAX_THETA * dx * dx / band.sigma_max_sq();
        let dt = self.dt();
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt,
                limit,
                theta: MAX_THETA,
                dx,
                sigma_max_sq: band.sigma_max_sq(),
            });
        }
        Ok(())
    }

    /// Same space discretization over a new horizon, with a time step no
    /// larger than the current one. When the new horizon is an integer
    /// multiple of `dt` the step is kept exactly.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        let steps = horizon / self.dt();
        let rounded = steps.round();
        let nt = if rounded >= 1.0 && (steps - rounded).abs() <= 1e-9 * rounded {
            rounded as usize
        } else {
            steps.ceil().max(1.0) as usize
        };
        Self::new(horizon, self.x_min, self.x_max, self.nx, nt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_acceptance_grid() {
        let band = VolatilityBand::new(1.0, 2.0).unwrap();
        let g = SpaceTimeGrid::cfl_matched(&band, 1.0, 8.5, 401, 0.5).unwrap();
        assert_eq!(g.nodes(), 401);
        assert_eq!(g.x(g.origin()), 0.0);
        assert!(g.theta(&band) <= 0.5);
        assert!(g.check_cfl(&band).is_ok());
        // one fewer step would break the bound
        let coarser = SpaceTimeGrid::new(1.0, -8.5, 8.5, 400, g.nt() - 1).unwrap();
        assert!(coarser.check_cfl(&band).is_err());
    }

    #[test]
    fn structural_invariants() {
        assert!(SpaceTimeGrid::new(1.0, 0.0, 1.0, 10, 10).is_err());
        assert!(SpaceTimeGrid::new(1.0, -1.0, 1.0, 2, 10).is_err());
        assert!(SpaceTimeGrid::new(1.0, -1.0, 1.0, 4, 0).is_err());
        assert!(SpaceTimeGrid::new(0.0, -1.0, 1.0, 4, 1).is_err());
        // origin off the lattice
        assert!(SpaceTimeGrid::new(1.0, -1.0, 2.0, 4, 1).is_err());
        assert!(SpaceTimeGrid::new(1.0, -1.0, 2.0, 3, 1).is_ok());
        let band = VolatilityBand::new(1.0, 2.0).unwrap();
        assert!(SpaceTimeGrid::cfl_matched(&band, 1.0, 8.5, 400, 0.5).is_err());
        assert!(SpaceTimeGrid::cfl_matched(&band, 1.0, 8.5, 401, 0.6).is_err());
    }

    #[test]
    fn with_horizon_keeps_exact_multiples() {
        let band = VolatilityBand::new(1.0, 2.0).unwrap();
        let g = SpaceTimeGrid::cfl_matched(&band, 1.0, 8.5, 401, 0.5).unwrap();
        let g2 = SpaceTimeGrid::new(2.0, -8.5, 8.5, 400, 2 * g.nt()).unwrap();
        assert_eq!(g2.with_horizon(1.0).unwrap().nt(), g.nt());
        let short = g.with_horizon(0.01).unwrap();
        assert!(short.dt() <= g.dt());
        assert!(short.check_cfl(&band).is_ok());
    }

    #[test]
    fn nearest_clamps() {
        let g = SpaceTimeGrid::new(1.0, -1.0, 1.0, 4, 1).unwrap();
        assert_eq!(g.nearest(-5.0), 0);
        assert_eq!(g.nearest(5.0), 4);
        assert_eq!(g.nearest(0.26), 3);
        assert_eq!(g.origin(), 2);
    }
}
