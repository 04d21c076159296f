//! Arithmetic expressions over `x` (test functions, `h`, terminals) or over
//! `(t, y, z)` (generators), with exact second-order derivatives.

mod ast;
mod jet;
mod parser;

use std::fmt;

use thiserror::Error;

pub use ast::{Expr, Func};
pub use jet::{Jet2, Scalar};

/// Smoothing width of `abs`: `abs(x) = sqrt(x² + ε²)`.
pub const ABS_SMOOTHING: f64 = 1e-8;

const SCALAR_VARS: &[&str] = &["x"];
const TRI_VARS: &[&str] = &["t", "y", "z"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unexpected token '{0}'")]
    UnexpectedToken(String),
    #[error("malformed number '{0}'")]
    BadNumber(String),
    #[error("exponent must be an integer literal")]
    BadExponent,
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("{name} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
}

/// Parse against an explicit variable list.
pub fn parse(text: &str, vars: &[&str]) -> Result<Expr, ParseError> {
    parser::parse(text, vars)
}

/// A function of one variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFunction {
    expr: Expr,
}

impl ScalarFunction {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parser::parse(text, SCALAR_VARS).map(|expr| Self { expr })
    }

    pub fn from_expr(expr: Expr) -> Self {
        Self { expr }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.expr.eval(&[x])
    }

    pub fn eval2(&self, x: f64) -> Result<Jet2, EvalError> {
        self.expr.eval(&[Jet2::variable(x)])
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ScalarFunction) -> ScalarFunction {
        Self { expr: self.expr.substitute(0, &inner.expr) }
    }

    pub fn sum(&self, other: &ScalarFunction) -> ScalarFunction {
        Self { expr: Expr::add(self.expr.clone(), other.expr.clone()) }
    }

    pub fn scaled(&self, lambda: f64) -> ScalarFunction {
        Self { expr: Expr::mul(Expr::constant(lambda), self.expr.clone()) }
    }

    pub fn constant(c: f64) -> ScalarFunction {
        Self { expr: Expr::constant(c) }
    }

    pub fn identity() -> ScalarFunction {
        Self { expr: Expr::Var(0) }
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.display(SCALAR_VARS).fmt(f)
    }
}

/// `(value, first derivative, second derivative)` at `x`.
pub fn eval2(func: &ScalarFunction, x: f64) -> Result<(f64, f64, f64), EvalError> {
    func.eval2(x).map(|j| (j.v, j.d1, j.d2))
}

/// A function of `(t, y, z)`, used for the drivers `g` and `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriFunction {
    expr: Expr,
}

impl TriFunction {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parser::parse(text, TRI_VARS).map(|expr| Self { expr })
    }

    pub fn zero() -> Self {
        Self { expr: Expr::Num(0.0) }
    }

    #[inline]
    pub fn eval(&self, t: f64, y: f64, z: f64) -> Result<f64, EvalError> {
        self.expr.eval(&[t, y, z])
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.expr, Expr::Num(c) if c == 0.0)
    }
}

impl fmt::Display for TriFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.display(TRI_VARS).fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let sq = ScalarFunction::parse("x^2").unwrap();
        assert_eq!(sq.eval(3.0).unwrap(), 9.0);
        assert_eq!(eval2(&sq, 3.0).unwrap(), (9.0, 6.0, 2.0));
        let e = ScalarFunction::parse("exp(x)").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 1.0);
        assert_eq!(eval2(&e, 0.0).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(ScalarFunction::parse("2*").unwrap_err().offset, 2);
    }

    #[test]
    fn tanh_matches_central_differences() {
        let f = ScalarFunction::parse("tanh(x)").unwrap();
        let h = 1e-4;
        let x = 0.5;
        let (v, d1, d2) = eval2(&f, x).unwrap();
        let (fp, fm) = (f.eval(x + h).unwrap(), f.eval(x - h).unwrap());
        assert!((d1 - (fp - fm) / (2.0 * h)).abs() < 1e-6);
        assert!((d2 - (fp - 2.0 * v + fm) / (h * h)).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        let f = ScalarFunction::parse("sqrt(x)").unwrap();
        assert!(matches!(f.eval(-1.0), Err(EvalError::Domain { func: "sqrt", .. })));
        assert!(f.eval2(0.0).is_err());
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        let sqrt_const = ScalarFunction::parse("x*0 + sqrt(4)").unwrap();
        assert_eq!(eval2(&sqrt_const, 1.0).unwrap(), (2.0, 0.0, 0.0));
        let r = ScalarFunction::parse("1/x").unwrap();
        assert_eq!(r.eval(0.0), Err(EvalError::DivisionByZero));
        assert_eq!(r.eval2(0.0), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn smoothed_abs() {
        let f = ScalarFunction::parse("abs(x)").unwrap();
        assert!((f.eval(-2.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(f.eval(0.0).unwrap(), ABS_SMOOTHING);
        let (_, d1, d2) = eval2(&f, 0.0).unwrap();
        assert_eq!(d1, 0.0);
        assert!((d2 - 1.0 / ABS_SMOOTHING).abs() < 1e-6 / ABS_SMOOTHING);
    }

    #[test]
    fn compose_sum_scale() {
        let h = ScalarFunction::parse("-(x^2)").unwrap();
        let phi = ScalarFunction::parse("sin(x)").unwrap();
        let hp = h.compose(&phi);
        assert!((hp.eval(0.7).unwrap() + 0.7f64.sin().powi(2)).abs() < 1e-15);
        let s = h.sum(&phi).scaled(-2.0);
        assert!((s.eval(1.0).unwrap() - (-2.0 * (-1.0 + 1f64.sin()))).abs() < 1e-15);
        // composed functions print to reparseable text
        let back = ScalarFunction::parse(&s.to_string()).unwrap();
        assert_eq!(back, s);
        assert_eq!(ScalarFunction::identity().compose(&phi), phi);
    }

    #[test]
    fn tri_function() {
        let g = TriFunction::parse("-y + 0.5*z*t").unwrap();
        assert_eq!(g.eval(2.0, 1.0, 3.0).unwrap(), 2.0);
        assert!(TriFunction::parse("0").unwrap().is_zero());
        assert!(!g.is_zero());
        assert!(TriFunction::parse("x").is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            (0u32..1000).prop_map(|n| Expr::Num(n as f64 / 8.0)),
            Just(Expr::Var(0)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner.clone(), -4i32..=4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
                (inner, prop::sample::select(Func::ALL.to_vec()))
                    .prop_map(|(a, f)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let f = ScalarFunction::from_expr(e);
            let printed = f.to_string();
            let reparsed = ScalarFunction::parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &f);
            // and once more through the printer
            prop_assert_eq!(ScalarFunction::parse(&reparsed.to_string()).unwrap(), reparsed);
        }
    }
}
