//! The pointwise G-convexity condition and the experiments around it.
//!
//! For `h ∈ C²` and drivers `(g, f)`, write `(h, h′, h″)` for the jet of `h`
//! at `y`. The condition at `(t, y, z, A)` is `gap ≥ 0` where
//!
//! ```text
//! gap = g(t, h, h′z) + 2G(f(t, h, h′z) + ½h″z² + ½h′A)
//!     − h′ g(t, y, z) − 2h′ G(f(t, y, z) + ½A)
//! ```
//!
//! `G` is piecewise linear, so `gap` is piecewise linear in `A` with at
//! most two kinks, and its infimum over `A ∈ ℝ` can be read off exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::VolatilityBand;
use crate::error::{Error, Result};
use crate::expr::{Expr, Func, ScalarFunction};
use crate::gbsde::{nonlinear_expectation_with, BsdeOptions, GeneratorPair};
use crate::grid::SpaceTimeGrid;

/// Gaps below `−VIOLATION_TOL` count as violations.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Representation errors at or below this level count as exact.
pub const EXACT_TOL: f64 = 1e-9;

/// The `A`-independent pieces of the gap at fixed `(t, y, z)`.
#[derive(Debug, Clone, Copy)]
struct GapParts {
    constant: f64,
    /// term one is `2G(c1 + ½h′A)`
    c1: f64,
    /// term two is `−2h′ G(c2 + ½A)`
    c2: f64,
    h1: f64,
}

impl GapParts {
    fn new(gen: &GeneratorPair, h: &ScalarFunction, t: f64, y: f64, z: f64) -> Result<Self> {
        let jet = h.eval2(y)?;
        let (hv, h1, h2) = (jet.v, jet.d1, jet.d2);
        let hz = h1 * z;
        let g_left = gen.g().eval(t, hv, hz)?;
        let f_left = gen.f().eval(t, hv, hz)?;
        let g_right = gen.g().eval(t, y, z)?;
        let f_right = gen.f().eval(t, y, z)?;
        Ok(Self {
            constant: g_left - h1 * g_right,
            c1: f_left + 0.5 * h2 * z * z,
            c2: f_right,
            h1,
        })
    }

    #[inline]
    fn gap(&self, band: &VolatilityBand, a: f64) -> f64 {
        let left = 2.0 * band.g(self.c1 + 0.5 * self.h1 * a);
        let right = 2.0 * self.h1 * band.g(self.c2 + 0.5 * a);
        self.constant + left - right
    }

    /// Slopes of `gap` as `A → +∞` and `A → −∞`.
    fn asymptotic_slopes(&self, band: &VolatilityBand) -> (f64, f64) {
        let spread = band.sigma_max_sq() - band.sigma_min_sq();
        let neg = (-self.h1).max(0.0);
        (0.5 * spread * neg, -0.5 * spread * neg)
    }

    fn kinks(&self) -> Vec<f64> {
        let mut out = vec![-2.0 * self.c2];
        if self.h1 != 0.0 {
            out.push(-2.0 * self.c1 / self.h1);
        }
        out
    }
}

pub fn condition_gap(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    h: &ScalarFunction,
    t: f64,
    y: f64,
    z: f64,
    a: f64,
) -> Result<f64> {
    Ok(GapParts::new(gen, h, t, y, z)?.gap(band, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgMin {
    Finite(f64),
    PosInf,
    NegInf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AInfimum {
    pub inf_gap: f64,
    pub argmin: ArgMin,
}

/// `inf_A gap(t, y, z, A)`. A negative slope at `+∞` (or positive at
/// `−∞`) sends the infimum to `−∞`; with the closed-form slopes this can
/// only happen for an inverted band. Otherwise the minimum sits at one of
/// the kinks.
pub fn reduce_over_a(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    h: &ScalarFunction,
    t: f64,
    y: f64,
    z: f64,
) -> Result<AInfimum> {
    Ok(reduce_parts(band, &GapParts::new(gen, h, t, y, z)?))
}

fn reduce_parts(band: &VolatilityBand, parts: &GapParts) -> AInfimum {
    let (s_plus, s_minus) = parts.asymptotic_slopes(band);
    if s_plus < 0.0 {
        return AInfimum { inf_gap: f64::NEG_INFINITY, argmin: ArgMin::PosInf };
    }
    if s_minus > 0.0 {
        return AInfimum { inf_gap: f64::NEG_INFINITY, argmin: ArgMin::NegInf };
    }
    let mut best = AInfimum { inf_gap: f64::INFINITY, argmin: ArgMin::Finite(0.0) };
    for a in parts.kinks() {
        let v = parts.gap(band, a);
        if v < best.inf_gap {
            best = AInfimum { inf_gap: v, argmin: ArgMin::Finite(a) };
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub t: f64,
    pub y_range: (f64, f64),
    pub z_range: (f64, f64),
    pub resolution: usize,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ok(self.y_range) || !ok(self.z_range) {
            return Err(Error::InvalidArgument("scan ranges must be finite with lo <= hi".into()));
        }
        if self.resolution < 16 {
            return Err(Error::InvalidArgument(format!("resolution must be >= 16, got {}", self.resolution)));
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidArgument("scan time must be finite".into()));
        }
        Ok(())
    }

    fn axis(&self, (lo, hi): (f64, f64)) -> Vec<f64> {
        let n = self.resolution;
        (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.axis(self.y_range)
    }

    pub fn zs(&self) -> Vec<f64> {
        self.axis(self.z_range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub y: f64,
    pub z: f64,
    pub a: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
}

/// One scanned cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub y: f64,
    pub z: f64,
    pub inf_gap: f64,
    pub argmin: ArgMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub verdict: Verdict,
    /// Sorted by `(y, z)`.
    pub witnesses: Vec<Witness>,
    pub scanned: ScanSpec,
    pub min_gap: f64,
    /// Every cell, `y`-major.
    pub cells: Vec<ScanCell>,
}

impl ConvexityReport {
    /// The most negative witness.
    pub fn worst_witness(&self) -> Option<Witness> {
        self.witnesses.iter().copied().min_by(|a, b| a.gap.total_cmp(&b.gap))
    }
}

pub fn check_g_convexity(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    h: &ScalarFunction,
    scan: &ScanSpec,
) -> Result<ConvexityReport> {
    check_g_convexity_with(band, gen, h, scan, 1)
}

/// Rows of the scan run in parallel when `threads > 1`; the report does not
/// depend on `threads`.
pub fn check_g_convexity_with(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    h: &ScalarFunction,
    scan: &ScanSpec,
    threads: usize,
) -> Result<ConvexityReport> {
    scan.validate()?;
    band.validate()?;
    let (ys, zs) = (scan.ys(), scan.zs());
    let row = |&y: &f64| -> Result<Vec<ScanCell>> {
        zs.iter()
            .map(|&z| {
                let inf = reduce_over_a(band, gen, h, scan.t, y, z)?;
                Ok(ScanCell { y, z, inf_gap: inf.inf_gap, argmin: inf.argmin })
            })
            .collect()
    };
    let rows: Vec<Vec<ScanCell>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| ys.par_iter().map(row).collect::<Result<_>>())?
    } else {
        ys.iter().map(row).collect::<Result<_>>()?
    };
    let cells: Vec<ScanCell> = rows.into_iter().flatten().collect();
    let min_gap = cells.iter().map(|c| c.inf_gap).fold(f64::INFINITY, f64::min);
    let mut witnesses: Vec<Witness> = cells
        .iter()
        .filter(|c| c.inf_gap < -VIOLATION_TOL)
        .map(|c| Witness {
            y: c.y,
            z: c.z,
            a: match c.argmin {
                ArgMin::Finite(a) => a,
                ArgMin::PosInf => f64::INFINITY,
                ArgMin::NegInf => f64::NEG_INFINITY,
            },
            gap: c.inf_gap,
        })
        .collect();
    witnesses.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.z.total_cmp(&b.z)));
    let verdict = if witnesses.is_empty() { Verdict::Holds } else { Verdict::Fails };
    Ok(ConvexityReport { verdict, witnesses, scanned: *scan, min_gap, cells })
}

/// `(E_{t,t+ε}[Φ(B_{t+ε} − B_t)] − Φ(0)) / ε`.
pub fn representation_quotient(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    terminal: &ScalarFunction,
    t: f64,
    eps: f64,
    grid: &SpaceTimeGrid,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let y = nonlinear_expectation_with(band, gen, terminal, t, t + eps, grid, &BsdeOptions::default())?;
    Ok((y - terminal.eval(0.0)?) / eps)
}

/// `g(t, Φ(0), Φ′(0)) + 2G(f(t, Φ(0), Φ′(0)) + ½Φ″(0))`.
pub fn representation_formula(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    terminal: &ScalarFunction,
    t: f64,
) -> Result<f64> {
    let jet = terminal.eval2(0.0)?;
    let gv = gen.g().eval(t, jet.v, jet.d1)?;
    let fv = gen.f().eval(t, jet.v, jet.d1)?;
    Ok(gv + 2.0 * band.g(fv + 0.5 * jet.d2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub eps: f64,
    pub quotient: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub formula: f64,
    pub rows: Vec<LimitRow>,
    /// Least-squares slope of `log error` against `log ε`; absent when the
    /// errors are at roundoff level.
    pub order: Option<f64>,
    /// All errors at or below [`EXACT_TOL`].
    pub exact: bool,
    pub decreasing: bool,
    pub final_relative_error: f64,
    pub passed: bool,
}

pub fn representation_limit_check(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    terminal: &ScalarFunction,
    t: f64,
    eps_list: &[f64],
    grid: &SpaceTimeGrid,
) -> Result<LimitReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidArgument("need at least three eps values".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps values must be strictly decreasing".into()));
    }
    let formula = representation_formula(band, gen, terminal, t)?;
    let rows: Vec<LimitRow> = eps_list
        .iter()
        .map(|&eps| {
            let quotient = representation_quotient(band, gen, terminal, t, eps, grid)?;
            Ok(LimitRow { eps, quotient, error: (quotient - formula).abs() })
        })
        .collect::<Result<_>>()?;
    let exact = rows.iter().all(|r| r.error <= EXACT_TOL);
    let decreasing = rows.windows(2).all(|w| w[1].error < w[0].error);
    let order = if exact || rows.iter().any(|r| r.error == 0.0) {
        None
    } else {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps.ln(), r.error.ln())).collect();
        Some(slope(&pts))
    };
    let last = rows.last().expect("at least three rows");
    let final_relative_error = last.error / (1.0 + formula.abs());
    let passed = exact || (decreasing && final_relative_error <= 0.05);
    Ok(LimitReport { formula, rows, order, exact, decreasing, final_relative_error, passed })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `E_{s,t}[h(φ(B_t − B_s))] − h(E_{s,t}[φ(B_t − B_s)])`.
#[allow(clippy::too_many_arguments)]
pub fn jensen_experiment(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    h: &ScalarFunction,
    phi: &ScalarFunction,
    s: f64,
    t: f64,
    grid: &SpaceTimeGrid,
) -> Result<JensenOutcome> {
    let opts = BsdeOptions::default();
    let lhs = nonlinear_expectation_with(band, gen, &h.compose(phi), s, t, grid, &opts)?;
    let inner = nonlinear_expectation_with(band, gen, phi, s, t, grid, &opts)?;
    let rhs = h.eval(inner)?;
    Ok(JensenOutcome { lhs, rhs, gap: lhs - rhs })
}

/// `φ(x) = (y₀ + z₀x + ½A₀x²) · bump(x)`: bounded, supported in `[−2, 2]`,
/// with jet `(y₀, z₀, A₀)` at the origin.
pub fn localized_quadratic(y0: f64, z0: f64, a0: f64) -> ScalarFunction {
    let x = Expr::Var(0);
    let quad = Expr::add(
        Expr::add(Expr::constant(y0), Expr::mul(Expr::constant(z0), x.clone())),
        Expr::mul(Expr::constant(0.5 * a0), Expr::Pow(Box::new(x.clone()), 2)),
    );
    ScalarFunction::from_expr(Expr::mul(quad, Expr::call(Func::Bump, x)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityOutcome {
    pub witness: Witness,
    pub phi: String,
    /// Jet of `h∘φ` at 0 as actually used.
    pub composed_jet: (f64, f64, f64),
    pub eps: f64,
    pub jensen: JensenOutcome,
    /// `gap₀ · ε`, the leading-order prediction.
    pub predicted: f64,
}

/// Run the Jensen experiment on the localized counterexample built from a
/// witness, over `[t, t + ε]`.
pub fn necessity_experiment(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    h: &ScalarFunction,
    witness: Witness,
    t: f64,
    eps: f64,
    grid: &SpaceTimeGrid,
) -> Result<NecessityOutcome> {
    if !witness.a.is_finite() {
        return Err(Error::InvalidArgument("witness has no finite A".into()));
    }
    let phi = localized_quadratic(witness.y, witness.z, witness.a);
    let jet = h.compose(&phi).eval2(0.0)?;
    let jensen = jensen_experiment(band, gen, h, &phi, t, t + eps, grid)?;
    Ok(NecessityOutcome {
        witness,
        phi: phi.to_string(),
        composed_jet: (jet.v, jet.d1, jet.d2),
        eps,
        jensen,
        predicted: witness.gap * eps,
    })
}
