//! Markovian G-BSDEs on the lattice.
//!
//! For terminal values `Φ(B_t − B_s)` the solution is `Y_r = u(t − r, B_r − B_s)`
//! where `u` solves, in time-to-go,
//!
//! ```text
//! ∂τu = g(t − τ, u, ∂ₓu) + 2G(f(t − τ, u, ∂ₓu) + ½∂ₓₓu),   u(0, ·) = Φ
//! ```
//!
//! with `Z = ∂ₓu` and `η = f + ½∂ₓₓu`. The decreasing G-martingale is
//! `K = ∫η d⟨B⟩ − 2∫G(η) ds`.
//!
//! Edge nodes advance with the drivers evaluated at `z = 0` and zero
//! curvature, which keeps every node's update monotone in its neighbours.
//! The `Z` reported there is one-sided.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::band::VolatilityBand;
use crate::error::{Error, Result};
use crate::expr::{EvalError, ScalarFunction, TriFunction};
use crate::gheat::{first_non_finite, gradient, sample, second_difference, FieldSolution, SolverOptions};
use crate::grid::SpaceTimeGrid;
use crate::oracle::LatticePath;

/// Number of random pairs used by the generator spot checks.
pub const SPOT_CHECK_PAIRS: usize = 1000;
const SPOT_CHECK_SEED: u64 = 0x6b5f_d1e7_0c3a_9e21;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPair {
    g: TriFunction,
    f: TriFunction,
    lipschitz: f64,
    h6: bool,
}

/// Box over which generator properties are spot-checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingDomain {
    pub t: (f64, f64),
    pub y_bound: f64,
    pub z_bound: f64,
}

impl GeneratorPair {
    pub fn new(g: TriFunction, f: TriFunction, lipschitz: f64) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::Generator(format!("Lipschitz constant must be finite and >= 0, got {lipschitz}")));
        }
        Ok(Self { g, f, lipschitz, h6: false })
    }

    pub fn parse(g: &str, f: &str, lipschitz: f64) -> Result<Self> {
        Self::new(TriFunction::parse(g)?, TriFunction::parse(f)?, lipschitz)
    }

    /// `g = f = 0`.
    pub fn zero() -> Self {
        Self { g: TriFunction::zero(), f: TriFunction::zero(), lipschitz: 0.0, h6: true }
    }

    /// Declare that `g(t, y, 0) = f(t, y, 0) = 0`.
    pub fn with_h6(mut self, h6: bool) -> Self {
        self.h6 = h6;
        self
    }

    pub fn g(&self) -> &TriFunction {
        &self.g
    }

    pub fn f(&self) -> &TriFunction {
        &self.f
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn h6(&self) -> bool {
        self.h6
    }

    pub fn is_zero(&self) -> bool {
        self.g.is_zero() && self.f.is_zero()
    }

    /// Seeded spot check of the declared Lipschitz bound in `(y, z)` and,
    /// when declared, of the vanishing at `z = 0`.
    pub fn check(&self, domain: &WorkingDomain) -> Result<()> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(SPOT_CHECK_SEED);
        let (t0, t1) = domain.t;
        let draw_t = |rng: &mut Xoshiro256PlusPlus| if t1 > t0 { rng.random_range(t0..=t1) } else { t0 };
        let yb = domain.y_bound.max(f64::MIN_POSITIVE);
        let zb = domain.z_bound.max(f64::MIN_POSITIVE);
        for _ in 0..SPOT_CHECK_PAIRS {
            let t = draw_t(&mut rng);
            let (y1, y2) = (rng.random_range(-yb..=yb), rng.random_range(-yb..=yb));
            let (z1, z2) = (rng.random_range(-zb..=zb), rng.random_range(-zb..=zb));
            let dist = (y1 - y2).abs() + (z1 - z2).abs();
            for (name, d) in [("g", &self.g), ("f", &self.f)] {
                let diff = (d.eval(t, y1, z1)? - d.eval(t, y2, z2)?).abs();
                if diff > self.lipschitz * dist * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::Generator(format!(
                        "{name} is not {}-Lipschitz: |{name}(t,{y1},{z1}) - {name}(t,{y2},{z2})| = {diff:e}",
                        self.lipschitz
                    )));
                }
            }
        }
        if self.h6 {
            for _ in 0..SPOT_CHECK_PAIRS {
                let t = draw_t(&mut rng);
                let y = rng.random_range(-yb..=yb);
                for (name, d) in [("g", &self.g), ("f", &self.f)] {
                    let v = d.eval(t, y, 0.0)?;
                    if v.abs() > 1e-12 {
                        return Err(Error::Generator(format!("{name}(t,{y},0) = {v:e}, expected 0")));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn drivers(&self, t: f64, y: f64, z: f64) -> Result<(f64, f64), EvalError> {
        Ok((self.g.eval(t, y, z)?, self.f.eval(t, y, z)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsdeOptions {
    pub threads: usize,
    /// Re-evaluate the drivers once at the predicted layer.
    pub picard: bool,
    /// Constant in the growth envelope used for blow-up detection.
    pub envelope: f64,
}

impl Default for BsdeOptions {
    fn default() -> Self {
        Self { threads: 1, picard: false, envelope: 1e4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsdeSolution {
    field: FieldSolution,
    eta: Vec<f64>,
    start: f64,
    end: f64,
}

impl BsdeSolution {
    /// Layer `k` sits at calendar time `end − k·Δt`.
    pub fn field(&self) -> &FieldSolution {
        &self.field
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        self.field.grid()
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn calendar_time(&self, layer: usize) -> f64 {
        self.end - layer as f64 * self.grid().dt()
    }

    /// `η = f(t, u, Z) + ½ ∂ₓₓu` at layer `k`, node `j`.
    pub fn eta(&self, k: usize, j: usize) -> f64 {
        self.eta[k * self.grid().nodes() + j]
    }

    pub fn eta_layer(&self, k: usize) -> &[f64] {
        let n = self.grid().nodes();
        &self.eta[k * n..(k + 1) * n]
    }

    pub fn y(&self, k: usize, j: usize) -> f64 {
        self.field.value(k, j)
    }

    pub fn z(&self, k: usize, j: usize) -> f64 {
        self.field.z(k, j)
    }

    /// `Y_start` at `x = 0`.
    pub fn initial_value(&self) -> f64 {
        let last = self.grid().nt();
        self.field.value(last, self.grid().origin())
    }
}

struct Stepper<'a> {
    band: &'a VolatilityBand,
    gen: &'a GeneratorPair,
    dt: f64,
    dx: f64,
    inv_dx2: f64,
}

impl Stepper<'_> {
    #[inline]
    fn increment(&self, t: f64, u: &[f64], curv_src: &[f64], j: usize) -> Result<f64, EvalError> {
        let edge = j == 0 || j + 1 == u.len();
        let z = if edge { 0.0 } else { (u[j + 1] - u[j - 1]) / (2.0 * self.dx) };
        let (gv, fv) = self.gen.drivers(t, u[j], z)?;
        let d2 = second_difference(curv_src, j, self.inv_dx2);
        Ok(self.dt * (gv + 2.0 * self.band.g(fv + 0.5 * d2)))
    }

    fn step(
        &self,
        t: f64,
        at: &[f64],
        curv_src: &[f64],
        base: &[f64],
        next: &mut [f64],
        pool: Option<&rayon::ThreadPool>,
    ) -> Result<(), EvalError> {
        let update = |(j, out): (usize, &mut f64)| -> Result<(), EvalError> {
            *out = base[j] + self.increment(t, at, curv_src, j)?;
            Ok(())
        };
        match pool {
            Some(pool) => pool.install(|| next.par_iter_mut().enumerate().try_for_each(update)),
            None => next.iter_mut().enumerate().try_for_each(update),
        }
    }
}

fn envelope(gen: &GeneratorPair, datum: &[f64], start: f64, end: f64, c: f64) -> Result<f64> {
    let tau = end - start;
    let mut sup_g = 0.0f64;
    let mut sup_f = 0.0f64;
    for k in 0..=16 {
        let t = start + tau * k as f64 / 16.0;
        sup_g = sup_g.max(gen.g.eval(t, 0.0, 0.0)?.abs());
        sup_f = sup_f.max(gen.f.eval(t, 0.0, 0.0)?.abs());
    }
    let phi = datum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(c * (phi + tau * sup_g + tau * sup_f))
}

fn working_domain(datum: &[f64], grid: &SpaceTimeGrid, start: f64, end: f64) -> WorkingDomain {
    let y = datum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let z = (0..datum.len()).fold(0.0f64, |m, j| m.max(gradient(datum, j, grid.dx()).abs()));
    WorkingDomain { t: (start, end), y_bound: 1.0 + y, z_bound: 1.0 + z }
}

pub fn solve_gbsde(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    terminal: &ScalarFunction,
    grid: &SpaceTimeGrid,
) -> Result<BsdeSolution> {
    solve_gbsde_on(band, gen, terminal, 0.0, grid, &BsdeOptions::default())
}

/// Solve on `[start, start + grid.horizon]` with the terminal value at the
/// right end.
pub fn solve_gbsde_on(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    terminal: &ScalarFunction,
    start: f64,
    grid: &SpaceTimeGrid,
    opts: &BsdeOptions,
) -> Result<BsdeSolution> {
    band.validate()?;
    grid.check_cfl(band)?;
    let end = start + grid.horizon();
    let datum = sample(terminal, grid)?;
    gen.check(&working_domain(&datum, grid, start, end))?;
    let bound = envelope(gen, &datum, start, end, opts.envelope)?;

    let n = grid.nodes();
    let dt = grid.dt();
    let stepper = Stepper { band, gen, dt, dx: grid.dx(), inv_dx2: 1.0 / (grid.dx() * grid.dx()) };
    let pool = SolverOptions { threads: opts.threads }.pool();

    let mut u = Vec::with_capacity((grid.nt() + 1) * n);
    u.extend_from_slice(&datum);
    let mut prev = datum;
    let mut next = vec![0.0; n];
    let mut predicted = if opts.picard { vec![0.0; n] } else { Vec::new() };
    for layer in 1..=grid.nt() {
        let t = end - (layer - 1) as f64 * dt;
        if opts.picard {
            stepper.step(t, &prev, &prev, &prev, &mut predicted, pool.as_ref())?;
            stepper.step(t - dt, &predicted, &prev, &prev, &mut next, pool.as_ref())?;
        } else {
            stepper.step(t, &prev, &prev, &prev, &mut next, pool.as_ref())?;
        }
        if let Some(node) = first_non_finite(&next) {
            return Err(Error::NonFinite { layer, node });
        }
        if let Some(v) = next.iter().find(|v| v.abs() > bound) {
            return Err(Error::BlowUp { layer, value: v.abs(), bound });
        }
        u.extend_from_slice(&next);
        std::mem::swap(&mut prev, &mut next);
    }
    let field = FieldSolution::from_layers(*grid, u);

    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let mut eta = Vec::with_capacity(field.layers() * n);
    for k in 0..field.layers() {
        let t = end - k as f64 * dt;
        let layer = field.layer(k);
        for j in 0..n {
            let z = gradient(layer, j, grid.dx());
            let fv = gen.f.eval(t, layer[j], z)?;
            eta.push(fv + 0.5 * second_difference(layer, j, inv_dx2));
        }
    }
    Ok(BsdeSolution { field, eta, start, end })
}

/// `E_{s,t}[Φ(B_t − B_s)]`: `Y_s` at `x = 0` of the equation on `[s, t]`,
/// using the space step of `grid` and a time step no larger than its own.
pub fn nonlinear_expectation(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    terminal: &ScalarFunction,
    s: f64,
    t: f64,
    grid: &SpaceTimeGrid,
) -> Result<f64> {
    nonlinear_expectation_with(band, gen, terminal, s, t, grid, &BsdeOptions::default())
}

pub fn nonlinear_expectation_with(
    band: &VolatilityBand,
    gen: &GeneratorPair,
    terminal: &ScalarFunction,
    s: f64,
    t: f64,
    grid: &SpaceTimeGrid,
    opts: &BsdeOptions,
) -> Result<f64> {
    let slack = 1e-12 * grid.horizon();
    if !(s >= 0.0 && s <= t && t <= grid.horizon() + slack) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= s <= t <= {}, got s = {s}, t = {t}",
            grid.horizon()
        )));
    }
    if s == t {
        return Ok(terminal.eval(0.0)?);
    }
    let sub = grid.with_horizon(t - s)?;
    Ok(solve_gbsde_on(band, gen, terminal, s, &sub, opts)?.initial_value())
}

/// `ΔK = (η a − 2G(η)) Δt` for realized variance density `a`. Never
/// positive, also in floating point.
pub fn k_increment(band: &VolatilityBand, eta: f64, a: f64, dt: f64) -> Result<f64> {
    if !band.contains(a) {
        return Err(Error::OutOfBand { a, lo: band.sigma_min_sq(), hi: band.sigma_max_sq() });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Ok((eta * a - 2.0 * band.g(eta)) * dt)
}

/// Running `K` along a path on the solution's time grid. Path step `i`
/// covers calendar `[tᵢ, tᵢ₊₁]` and reads `η` at the nearest node of the
/// layer at `tᵢ`.
pub fn k_along_path(band: &VolatilityBand, sol: &BsdeSolution, path: &LatticePath) -> Result<Vec<f64>> {
    let grid = sol.grid();
    let nt = grid.nt();
    if path.len() != nt + 1 {
        return Err(Error::GridMismatch(format!("path has {} points, solution has {} layers", path.len(), nt + 1)));
    }
    let dt = grid.dt();
    let tol = 1e-9 * grid.horizon();
    for (i, &t) in path.times().iter().enumerate() {
        if (t - (sol.start() + i as f64 * dt)).abs() > tol {
            return Err(Error::GridMismatch(format!("path time {t} at step {i} is off the solution grid")));
        }
    }
    let mut k = Vec::with_capacity(nt + 1);
    let mut acc = 0.0;
    k.push(acc);
    for i in 0..nt {
        let j = grid.nearest(path.b()[i]);
        acc += k_increment(band, sol.eta(nt - i, j), path.a()[i], dt)?;
        k.push(acc);
    }
    Ok(k)
}
