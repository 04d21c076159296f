use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::band::VolatilityBand;
use crate::error::{Error, Result};
use crate::gbsde::BsdeSolution;
use crate::grid::SpaceTimeGrid;

/// A sampled scenario: `n + 1` times, positions and running quadratic
/// variation, and `n` increments with the variance density used on each.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePath {
    times: Vec<f64>,
    b: Vec<f64>,
    db: Vec<f64>,
    a: Vec<f64>,
    qv: Vec<f64>,
}

impl LatticePath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn increments(&self) -> &[f64] {
        &self.db
    }

    /// Variance density on step `i`, i.e. on `[tᵢ, tᵢ₊₁]`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn qv(&self) -> &[f64] {
        &self.qv
    }

    /// The mirrored path `−B` (same controls).
    pub fn negated(&self) -> Self {
        Self {
            times: self.times.clone(),
            b: self.b.iter().map(|v| -v).collect(),
            db: self.db.iter().map(|v| -v).collect(),
            a: self.a.clone(),
            qv: self.qv.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    ConstLow,
    ConstHigh,
    /// `a` uniform on the band, fresh each step.
    Random,
    /// The worst case for a solved equation: `σ̄²` where `η ≥ 0`, `σ̲²` where
    /// `η < 0`, read at the current position.
    Markov(&'a BsdeSolution),
}

impl Policy<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::ConstLow => "const-low",
            Policy::ConstHigh => "const-high",
            Policy::Random => "random",
            Policy::Markov(_) => "markov",
        }
    }
}

/// Increments `√(aᵢΔt) ξᵢ` with `ξᵢ = ±1` from a seeded xoshiro256++
/// stream. `qv` accumulates the squared increments, which equal `aᵢΔt` up
/// to one rounding. Paths over a Markov policy start at the solution's
/// start time.
pub fn simulate_path(band: &VolatilityBand, policy: Policy<'_>, grid: &SpaceTimeGrid, seed: u64) -> LatticePath {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let n = grid.nt();
    let dt = grid.dt();
    let (lo, hi) = (band.sigma_min_sq(), band.sigma_max_sq());
    let start = match policy {
        Policy::Markov(sol) => sol.start(),
        _ => 0.0,
    };
    let mut path = LatticePath {
        times: (0..=n).map(|i| start + i as f64 * dt).collect(),
        b: Vec::with_capacity(n + 1),
        db: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        qv: Vec::with_capacity(n + 1),
    };
    let (mut b, mut qv) = (0.0, 0.0);
    path.b.push(b);
    path.qv.push(qv);
    for i in 0..n {
        let a = match policy {
            Policy::ConstLow => lo,
            Policy::ConstHigh => hi,
            Policy::Random => rng.random_range(lo..=hi),
            Policy::Markov(sol) => {
                let sg = sol.grid();
                let to_go = (sol.end() - path.times[i]) / sg.dt();
                let layer = (to_go.round().max(0.0) as usize).min(sg.nt());
                if sol.eta(layer, sg.nearest(b)) >= 0.0 {
                    hi
                } else {
                    lo
                }
            }
        };
        let xi = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let step = (a * dt).sqrt() * xi;
        b += step;
        qv += step * step;
        path.a.push(a);
        path.db.push(step);
        path.b.push(b);
        path.qv.push(qv);
    }
    path
}

/// Partial sums of squared increments.
pub fn quadratic_variation_of(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for d in increments {
        acc += d * d;
        out.push(acc);
    }
    out
}

pub fn quadratic_variation(path: &LatticePath) -> Vec<f64> {
    quadratic_variation_of(&path.db)
}

/// Polarization `¼[⟨X + Y⟩ − ⟨X − Y⟩]` on increment series of equal length.
pub fn mutual_variation_of(dx: &[f64], dy: &[f64]) -> Result<Vec<f64>> {
    if dx.len() != dy.len() {
        return Err(Error::GridMismatch(format!("{} vs {} increments", dx.len(), dy.len())));
    }
    let sum: Vec<f64> = dx.iter().zip(dy).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = dx.iter().zip(dy).map(|(a, b)| a - b).collect();
    let (qs, qd) = (quadratic_variation_of(&sum), quadratic_variation_of(&diff));
    Ok(qs.iter().zip(&qd).map(|(s, d)| 0.25 * (s - d)).collect())
}

pub fn mutual_variation(p1: &LatticePath, p2: &LatticePath) -> Result<Vec<f64>> {
    if p1.times != p2.times {
        return Err(Error::GridMismatch("paths live on different time grids".into()));
    }
    mutual_variation_of(&p1.db, &p2.db)
}
