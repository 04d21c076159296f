mod support;

use gconvex::convexity::{
    check_g_convexity, condition_gap, jensen_experiment, necessity_experiment, reduce_over_a, representation_limit_check,
    representation_quotient, ArgMin, ScanSpec, Verdict,
};
use gconvex::gbsde::GeneratorPair;
use gconvex::oracle::tree_expectation;
use gconvex::{ScalarFunction, SpaceTimeGrid, VolatilityBand};
use proptest::prelude::*;
use support::{dense_scan_min, GapInA, ScanVerdict};

fn band() -> VolatilityBand {
    VolatilityBand::new(1.0, 2.0).unwrap()
}

fn grid() -> SpaceTimeGrid {
    SpaceTimeGrid::cfl_matched(&band(), 1.0, 8.5, 401, 0.5).unwrap()
}

fn f(s: &str) -> ScalarFunction {
    ScalarFunction::parse(s).unwrap()
}

fn gen(g: &str, fd: &str) -> GeneratorPair {
    GeneratorPair::parse(g, fd, 1.0).unwrap()
}

fn scan() -> ScanSpec {
    ScanSpec { t: 0.0, y_range: (-2.0, 2.0), z_range: (-2.0, 2.0), resolution: 17 }
}

const H_FAMILY: [&str; 8] = ["exp(x)", "-(x^2)", "x^3", "tanh(x)", "sin(x)", "x^2", "exp(-x)", "x^4 - x"];

fn arb_instance() -> impl Strategy<Value = (GeneratorPair, ScalarFunction, f64, f64)> {
    let c = || (-100i32..=100).prop_map(|k| k as f64 / 100.0);
    (prop::array::uniform8(c()), 0..H_FAMILY.len(), 0.2f64..3.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(
        |(k, hi, scale, y, z)| {
            let g = format!("{}*y + {}*z + {}*sin(z) + {}", k[0], k[1], k[2], k[3]);
            let fd = format!("{}*y + {}*z + {}*tanh(y) + {}", k[4], k[5], k[6], k[7]);
            let h = format!("{scale}*({})", H_FAMILY[hi]);
            (GeneratorPair::parse(&g, &fd, 4.0).unwrap(), f(&h), y, z)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_matches_dense_scan((gp, h, y, z) in arb_instance()) {
        let oracle = GapInA::new(&band(), &gp, &h, 0.0, y, z);
        prop_assume!(oracle.kinks().iter().all(|k| k.abs() <= 900.0));
        let got = reduce_over_a(&band(), &gp, &h, 0.0, y, z).unwrap();
        match (dense_scan_min(|a| oracle.eval(a), -1000.0, 1000.0, 100_000), got.argmin) {
            (ScanVerdict::Finite(v), ArgMin::Finite(a)) => {
                prop_assert!((v - got.inf_gap).abs() <= 1e-9, "{} vs {}", got.inf_gap, v);
                let at = condition_gap(&band(), &gp, &h, 0.0, y, z, a).unwrap();
                prop_assert!((at - got.inf_gap).abs() <= 1e-12);
            }
            (o, g) => prop_assert!(
                matches!((o, g), (ScanVerdict::PosInf, ArgMin::PosInf) | (ScanVerdict::NegInf, ArgMin::NegInf)),
                "{:?} vs {:?}", o, g
            ),
        }
    }

    #[test]
    fn g_terms_scale_with_the_band(
        c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, hi in 0..H_FAMILY.len(),
        y in -2.0f64..2.0, z in -2.0f64..2.0, a in -10.0f64..10.0, lambda in 0.1f64..10.0,
    ) {
        let gp = GeneratorPair::parse(&c1.to_string(), &c2.to_string(), 1.0).unwrap();
        let h = f(H_FAMILY[hi]);
        let h1 = h.eval2(y).unwrap().d1;
        let constant = c1 * (1.0 - h1);
        let base = condition_gap(&band(), &gp, &h, 0.0, y, z, a).unwrap() - constant;
        let scaled = condition_gap(&band().scaled(lambda).unwrap(), &gp, &h, 0.0, y, z, a).unwrap() - constant;
        prop_assert!((scaled - lambda * base).abs() <= 1e-9 * (1.0 + lambda * base.abs()));
    }
}

#[test]
fn failing_pairs_produce_counterexamples() {
    for (g, fd, h) in [("0", "0", "-(x^2)"), ("-y", "0", "exp(x)")] {
        let (gp, hf) = (gen(g, fd), f(h));
        let report = check_g_convexity(&band(), &gp, &hf, &scan()).unwrap();
        assert_eq!(report.verdict, Verdict::Fails, "{h}");
        let w = report.worst_witness().unwrap();
        let eps = 0.01;
        let out = necessity_experiment(&band(), &gp, &hf, w, 0.0, eps, &grid()).unwrap();
        assert!(out.jensen.gap <= 0.5 * w.gap * eps, "{h}: gap {} vs witness {:?}", out.jensen.gap, w);
        assert!(out.jensen.gap >= 2.0 * w.gap * eps, "{h}: gap {} vs witness {:?}", out.jensen.gap, w);
    }
}

#[test]
fn convex_exp_jensen_gap_and_tree_cross_check() {
    let (h, phi) = (f("exp(x)"), f("tanh(x)"));
    let out = jensen_experiment(&band(), &GeneratorPair::zero(), &h, &phi, 0.0, 1.0, &grid()).unwrap();
    assert!(out.gap >= -1e-4, "{out:?}");
    let lhs = tree_expectation(&band(), &h.compose(&phi), 1.0, 2000).unwrap();
    let inner = tree_expectation(&band(), &phi, 1.0, 2000).unwrap();
    assert!((out.lhs - lhs).abs() < 5e-3);
    assert!((out.rhs - inner.exp()).abs() < 5e-3);
}

#[test]
fn affine_h_jensen_gap_across_grids() {
    let gp = gen("-y", "0.25*z");
    let (h, phi) = (f("2*x - 1"), f("sin(x)"));
    let gaps: Vec<f64> = [101, 201, 401]
        .iter()
        .map(|&n| {
            let g = SpaceTimeGrid::cfl_matched(&band(), 1.0, 8.5, n, 0.45).unwrap();
            jensen_experiment(&band(), &gp, &h, &phi, 0.0, 1.0, &g).unwrap().gap
        })
        .collect();
    assert!(gaps.iter().all(|g| *g >= -1e-3), "{gaps:?}");
}

#[test]
fn quotient_examples() {
    let z = GeneratorPair::zero();
    let q = representation_quotient(&band(), &z, &f("x^2"), 0.0, 0.01, &grid()).unwrap();
    assert!((q - 2.0).abs() < 0.04, "{q}");
    let q = representation_quotient(&band(), &z, &f("x"), 0.0, 0.01, &grid()).unwrap();
    assert!(q.abs() < 1e-9, "{q}");
    let q = representation_quotient(&band(), &gen("y + z", "0"), &f("sin(x)"), 0.0, 0.005, &grid()).unwrap();
    assert!((q - 1.0).abs() < 0.05, "{q}");
}

#[test]
fn sin_terminal_converges_at_half_order() {
    // Φ″(0) = 0 puts the limit on the kink of G; the odd third moment of
    // the G-normal law then leaves an O(√ε) remainder
    let eps = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125];
    let rep = representation_limit_check(&band(), &GeneratorPair::zero(), &f("sin(x)"), 0.0, &eps, &grid()).unwrap();
    assert!(rep.decreasing);
    let order = rep.order.unwrap();
    assert!((0.4..0.6).contains(&order), "{order}");
}

#[test]
fn constant_terminal_is_exact() {
    let rep =
        representation_limit_check(&band(), &GeneratorPair::zero(), &f("3"), 0.0, &[0.1, 0.05, 0.025], &grid()).unwrap();
    assert!(rep.exact && rep.passed);
    assert!(rep.rows.iter().all(|r| r.error == 0.0));
}

#[test]
fn degenerate_band_matches_classical_generator() {
    let b = VolatilityBand::degenerate(1.5).unwrap();
    let g = SpaceTimeGrid::cfl_matched(&b, 1.0, 8.5, 401, 0.5).unwrap();
    let gp = gen("-y + z", "0");
    let phi = f("cos(x) + x");
    // g(0, 1, 1) + ½σ²Φ″(0)
    let classical = -0.5 * 1.5;
    let rep = representation_limit_check(&b, &gp, &phi, 0.0, &[0.1, 0.05, 0.025, 0.0125], &g).unwrap();
    assert!((rep.formula - classical).abs() < 1e-12, "{}", rep.formula);
    assert!(rep.passed && rep.order.unwrap() >= 0.8, "{rep:?}");
}
