//! Named test functions shared by the CLI, the property suites and the
//! acceptance runner.

use crate::expr::ScalarFunction;

/// Eight test functions: polynomials up to degree four, two bounded smooth
/// functions, and a smoothly clipped exponential `exp(2 tanh(x/2))`, which
/// agrees with `exp` to second order at 0 and stays within `[e⁻², e²]`.
pub const TEST_FUNCTIONS: [(&str, &str); 8] = [
    ("x", "x"),
    ("x2", "x^2"),
    ("neg_x2", "-x^2"),
    ("x3", "x^3"),
    ("x4", "x^4"),
    ("tanh", "tanh(x)"),
    ("exp_clipped", "exp(2*tanh(x/2))"),
    ("sin", "sin(x)"),
];

pub fn test_functions() -> Vec<(&'static str, ScalarFunction)> {
    TEST_FUNCTIONS
        .iter()
        .map(|(name, src)| (*name, ScalarFunction::parse(src).expect("catalog parses")))
        .collect()
}

pub fn by_name(name: &str) -> Option<ScalarFunction> {
    TEST_FUNCTIONS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| ScalarFunction::parse(src).expect("catalog parses"))
}
