use crate::band::VolatilityBand;
use crate::error::{Error, Result};
use crate::expr::ScalarFunction;
use crate::gbsde::{k_increment, BsdeSolution};

/// `Ê[φ(B_t)]` by backward induction on a recombining trinomial lattice
/// with `Δx = σ̄√Δt`. A step with variance density `a` moves `±Δx` with
/// probability `a / 2σ̄²` each and stays put otherwise; each node takes the
/// larger of the two endpoint densities.
pub fn tree_expectation(band: &VolatilityBand, phi: &ScalarFunction, t: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidArgument("tree needs at least one step".into()));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(phi.eval(0.0)?);
    }
    let dt = t / steps as f64;
    let dx = band.sigma_max() * dt.sqrt();
    let probs = [band.sigma_min_sq(), band.sigma_max_sq()].map(|a| a / (2.0 * band.sigma_max_sq()));

    // node k of layer i sits at (k − i)Δx
    let mut v: Vec<f64> = (0..=2 * steps)
        .map(|k| phi.eval((k as f64 - steps as f64) * dx))
        .collect::<Result<_, _>>()?;
    for i in (0..steps).rev() {
        for k in 0..=2 * i {
            let (down, mid, up) = (v[k], v[k + 1], v[k + 2]);
            v[k] = probs
                .iter()
                .map(|&p| p * (up + down) + (1.0 - 2.0 * p) * mid)
                .fold(f64::NEG_INFINITY, f64::max);
        }
        v.truncate(2 * i + 1);
    }
    Ok(v[0])
}

/// `sup_a E_a[K_T]` over Markov volatility controls, by dynamic programming
/// on the solution's own lattice: `Vᵢ = max_a [ΔK(η, a) + E_a Vᵢ₊₁]` with
/// moves `±Δx` of probability `aΔt / 2Δx²`. Edge nodes reflect onto
/// themselves.
pub fn worst_case_k_expectation(band: &VolatilityBand, sol: &BsdeSolution) -> Result<f64> {
    let grid = sol.grid();
    let (nt, n) = (grid.nt(), grid.nodes());
    let dt = grid.dt();
    let dx2 = grid.dx() * grid.dx();
    let controls = [band.sigma_min_sq(), band.sigma_max_sq()];
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    for i in (0..nt).rev() {
        let eta = sol.eta_layer(nt - i);
        for j in 0..n {
            let up = v[(j + 1).min(n - 1)];
            let down = v[j.saturating_sub(1)];
            let mut best = f64::NEG_INFINITY;
            for &a in &controls {
                let p = a * dt / (2.0 * dx2);
                let cont = p * (up + down) + (1.0 - 2.0 * p) * v[j];
                best = best.max(k_increment(band, eta[j], a, dt)? + cont);
            }
            next[j] = best;
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(v[grid.origin()])
}
