//! The volatility band `[σ̲², σ̄²]` and the sublinear function `G` it induces.
//!
//! In one dimension the uncertainty set of variances is an interval, so
//! `G(a) = ½ sup_{γ ∈ [σ̲², σ̄²]} γ a = ½ (σ̄² a⁺ − σ̲² a⁻)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interval of admissible variance densities. Both endpoints are in
/// variance units (σ², not σ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolatilityBand {
    sigma_min_sq: f64,
    sigma_max_sq: f64,
}

impl VolatilityBand {
    pub fn new(sigma_min_sq: f64, sigma_max_sq: f64) -> Result<Self> {
        let ok = sigma_min_sq.is_finite()
            && sigma_max_sq.is_finite()
            && sigma_min_sq > 0.0
            && sigma_min_sq <= sigma_max_sq;
        if !ok {
            return Err(Error::InvalidBand {
                sigma_min_sq,
                sigma_max_sq,
            });
        }
        Ok(Self {
            sigma_min_sq,
            sigma_max_sq,
        })
    }

    /// Band with σ̲² = σ̄², i.e. the classical Gaussian case.
    pub fn degenerate(sigma_sq: f64) -> Result<Self> {
        Self::new(sigma_sq, sigma_sq)
    }

    pub fn sigma_min_sq(&self) -> f64 {
        self.sigma_min_sq
    }

    pub fn sigma_max_sq(&self) -> f64 {
        self.sigma_max_sq
    }

    pub fn contains(&self, a: f64) -> bool {
        a >= self.sigma_min_sq && a <= self.sigma_max_sq
    }

    /// `G(a) = ½(σ̄² a⁺ − σ̲² a⁻)`.
    #[inline]
    pub fn g(&self, a: f64) -> f64 {
        0.5 * (self.sigma_max_sq * a.max(0.0) - self.sigma_min_sq * (-a).max(0.0))
    }

    /// Variance density attaining the supremum in `G(a)`.
    #[inline]
    pub fn worst_case_variance(&self, a: f64) -> f64 {
        if a >= 0.0 {
            self.sigma_max_sq
        } else {
            self.sigma_min_sq
        }
    }

    /// Same band with both endpoints multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.sigma_min_sq * lambda, self.sigma_max_sq * lambda)
    }

    /// Upper-volatility σ̄ (standard deviation units).
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max_sq.sqrt()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        Self::new(self.sigma_min_sq, self.sigma_max_sq).map(|_| ())
    }
}

/// Free-function form of [`VolatilityBand::g`].
pub fn g_eval(band: &VolatilityBand, a: f64) -> f64 {
    band.g(a)
}
