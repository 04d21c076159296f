mod support;

use gconvex::catalog;
use gconvex::gheat::{conditional_g_expectation, g_expectation, solve_g_heat, CylinderPayoff};
use gconvex::oracle::tree_expectation;
use gconvex::{ScalarFunction, SpaceTimeGrid, VolatilityBand};
use proptest::prelude::*;
use support::{arb_function, gaussian_expectation};

fn band() -> VolatilityBand {
    VolatilityBand::new(1.0, 2.0).unwrap()
}

fn coarse() -> SpaceTimeGrid {
    SpaceTimeGrid::cfl_matched(&band(), 1.0, 8.0, 121, 0.5).unwrap()
}

fn e(phi: &ScalarFunction) -> f64 {
    g_expectation(&band(), phi, 1.0, &coarse()).unwrap()
}

#[test]
fn degenerate_band_is_gaussian() {
    let b = VolatilityBand::degenerate(1.5).unwrap();
    let grid = SpaceTimeGrid::cfl_matched(&b, 1.0, 8.5, 401, 0.5).unwrap();
    for src in ["sin(x)", "tanh(x)", "exp(2*tanh(x/2))", "x^2", "cos(x) * x^2"] {
        let phi = ScalarFunction::parse(src).unwrap();
        let pde = g_expectation(&b, &phi, 1.0, &grid).unwrap();
        let exact = gaussian_expectation(&phi, 1.5, 80);
        assert!((pde - exact).abs() < 1e-4, "{src}: {pde} vs {exact}");
    }
}

#[test]
fn spatial_refinement_is_second_order() {
    let phi = ScalarFunction::parse("x^4").unwrap();
    let err = |nodes| {
        let grid = SpaceTimeGrid::cfl_matched(&band(), 1.0, 8.5, nodes, 0.5).unwrap();
        (g_expectation(&band(), &phi, 1.0, &grid).unwrap() - 12.0).abs()
    };
    let (coarse, fine) = (err(101), err(201));
    assert!(coarse / fine >= 3.0, "{coarse} -> {fine}");
}

#[test]
fn catalog_maximum_principle() {
    let grid = coarse();
    for (name, phi) in catalog::test_functions() {
        let sol = solve_g_heat(&band(), &phi, &grid).unwrap();
        let datum = sol.layer(0);
        let (lo, hi) = datum.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        for k in 1..sol.layers() {
            assert!(sol.layer(k).iter().all(|&v| v >= lo && v <= hi), "{name} layer {k}");
        }
    }
}

#[test]
fn conditional_matches_tree() {
    // Ê[φ(x₁ + x₂) | x₁] is the tree value of φ(x₁ + ·) over the second increment
    let grid = SpaceTimeGrid::cfl_matched(&band(), 1.0, 8.0, 321, 0.5).unwrap();
    let p = CylinderPayoff::new(vec![0.4, 1.0], |x| (x[0] + x[1]).sin() + 0.5 * (x[0] + x[1]).tanh().powi(2)).unwrap();
    let table = conditional_g_expectation(&band(), &p, 1, &grid).unwrap();
    for x1 in [-1.0, 0.3, 1.2] {
        let shifted = ScalarFunction::parse(&format!("sin(x + {x1}) + 0.5*tanh(x + {x1})^2")).unwrap();
        let tree = tree_expectation(&band(), &shifted, 0.6, 2000).unwrap();
        let v = table.eval(&[x1]).unwrap();
        assert!((v - tree).abs() < 5e-3, "x1={x1}: {v} vs {tree}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn monotone(phi in arb_function(), psi in arb_function()) {
        let upper = phi.sum(&ScalarFunction::parse("x^2").unwrap().compose(&psi));
        prop_assert!(e(&phi) <= e(&upper) + 1e-12);
    }

    #[test]
    fn preserves_constants(c in -50.0f64..50.0) {
        let v = e(&ScalarFunction::constant(c));
        prop_assert!((v - c).abs() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn translation_by_constants(phi in arb_function(), c in -5.0f64..5.0) {
        let shifted = e(&phi.sum(&ScalarFunction::constant(c)));
        prop_assert!((shifted - e(&phi) - c).abs() < 1e-10);
    }

    #[test]
    fn subadditive(phi in arb_function(), psi in arb_function()) {
        prop_assert!(e(&phi.sum(&psi)) <= e(&phi) + e(&psi) + 1e-10);
    }

    #[test]
    fn positively_homogeneous(phi in arb_function(), lambda in 0.0f64..5.0) {
        let scaled = e(&phi.scaled(lambda));
        prop_assert!((scaled - lambda * e(&phi)).abs() < 1e-10 * (1.0 + lambda));
    }

    #[test]
    fn negation_bounds_below(phi in arb_function()) {
        // −Ê[−φ] ≤ Ê[φ]
        prop_assert!(-e(&phi.scaled(-1.0)) <= e(&phi) + 1e-12);
    }
}
