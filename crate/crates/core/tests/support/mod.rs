//! Oracles shared by the integration suites. Nothing here calls the
//! solvers under test.

#![allow(dead_code)]

use gconvex::expr::ScalarFunction;
use gconvex::gbsde::GeneratorPair;
use gconvex::VolatilityBand;

/// Gauss–Hermite nodes and weights for `∫ e^{−x²} f(x) dx`, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E[φ(σ N)]` for a standard normal `N`.
pub fn gaussian_expectation(phi: &ScalarFunction, variance: f64, n: usize) -> f64 {
    let (x, w) = gauss_hermite(n);
    let s = (2.0 * variance).sqrt();
    let total: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * phi.eval(s * xi).unwrap()).sum();
    total / std::f64::consts::PI.sqrt()
}

/// The condition gap as a function of `A`, assembled from scratch at a
/// fixed `(t, y, z)`.
pub struct GapInA {
    band: VolatilityBand,
    left_const: f64,
    left_inner: f64,
    right_scale: f64,
    right_inner: f64,
    h1: f64,
}

impl GapInA {
    pub fn new(band: &VolatilityBand, gen: &GeneratorPair, h: &ScalarFunction, t: f64, y: f64, z: f64) -> Self {
        let hv = h.eval(y).unwrap();
        let jet = h.eval2(y).unwrap();
        let (h1, h2) = (jet.d1, jet.d2);
        let g = |a: f64, b: f64, c: f64| gen.g().eval(a, b, c).unwrap();
        let f = |a: f64, b: f64, c: f64| gen.f().eval(a, b, c).unwrap();
        Self {
            band: *band,
            left_const: g(t, hv, h1 * z) - h1 * g(t, y, z),
            left_inner: f(t, hv, h1 * z) + 0.5 * h2 * z * z,
            right_scale: h1,
            right_inner: f(t, y, z),
            h1,
        }
    }

    pub fn eval(&self, a: f64) -> f64 {
        let big_g = |x: f64| {
            let (lo, hi) = (self.band.sigma_min_sq(), self.band.sigma_max_sq());
            if x >= 0.0 {
                0.5 * hi * x
            } else {
                0.5 * lo * x
            }
        };
        self.left_const + 2.0 * big_g(self.left_inner + 0.5 * self.h1 * a)
            - 2.0 * self.right_scale * big_g(self.right_inner + 0.5 * a)
    }

    /// Candidate kink locations, for rejecting instances whose kinks fall
    /// near the scan window's edge.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = vec![-2.0 * self.right_inner];
        if self.h1 != 0.0 {
            k.push(-2.0 * self.left_inner / self.h1);
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanVerdict {
    Finite(f64),
    PosInf,
    NegInf,
}

/// Minimum of `f` over `[lo, hi]` from `points` equispaced samples, then
/// repeated zooms around every discrete local minimum.
pub fn dense_scan_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> ScanVerdict {
    let step = (hi - lo) / (points - 1) as f64;
    let vals: Vec<f64> = (0..points).map(|k| f(lo + k as f64 * step)).collect();
    let slope_left = (vals[1] - vals[0]) / step;
    let slope_right = (vals[points - 1] - vals[points - 2]) / step;
    if slope_right < -1e-9 {
        return ScanVerdict::PosInf;
    }
    if slope_left > 1e-9 {
        return ScanVerdict::NegInf;
    }
    let mut best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut centers: Vec<usize> = (1..points - 1)
        .filter(|&k| vals[k] < vals[k - 1] && vals[k] <= vals[k + 1])
        .collect();
    let argmin = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    centers.push(argmin);
    for k in centers {
        let mut c = lo + k as f64 * step;
        let mut half = step;
        for _ in 0..8 {
            let n = 101;
            let (a, b) = (c - half, c + half);
            let h = (b - a) / (n - 1) as f64;
            let (mut bx, mut bv) = (c, f(c));
            for i in 0..n {
                let x = a + i as f64 * h;
                let v = f(x);
                if v < bv {
                    bx = x;
                    bv = v;
                }
            }
            best = best.min(bv);
            c = bx;
            half = 2.0 * h;
        }
    }
    ScanVerdict::Finite(best)
}

/// Smooth functions of at most quadratic growth, built from rounded
/// coefficients so failures print readably.
pub fn arb_function() -> impl proptest::strategy::Strategy<Value = ScalarFunction> {
    use proptest::prelude::*;
    let coef = || (-20i32..=20).prop_map(|k| k as f64 / 10.0);
    (coef(), coef(), coef(), coef(), coef()).prop_map(|(a, b, c, d, e)| {
        ScalarFunction::parse(&format!("{a}*sin({b}*x) + {c}*tanh(x) + {d}*x^2/4 + {e}")).unwrap()
    })
}
