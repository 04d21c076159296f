//! Second-order truncated Taylor arithmetic.
//!
//! A [`Jet2`] carries `(f, f', f'')` at a point; every operation applies the
//! chain/product rule up to second order, so evaluating an expression on the
//! seed `(x, 1, 0)` yields exact first and second derivatives.

use std::ops::{Add, Mul, Neg, Sub};

use super::ast::Func;
use super::{EvalError, ABS_SMOOTHING};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }

    pub fn variable(v: f64) -> Self {
        Self { v, d1: 1.0, d2: 0.0 }
    }

    /// Compose with a scalar function whose value and first two
    /// derivatives at `self.v` are `(f0, f1, f2)`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            v: f0,
            d1: f1 * self.d1,
            d2: f2 * self.d1 * self.d1 + f1 * self.d2,
        }
    }

    fn is_constant(&self) -> bool {
        self.d1 == 0.0 && self.d2 == 0.0
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

/// Number type the expression evaluator runs over.
pub trait Scalar: Copy {
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn div(self, o: Self) -> Result<Self, EvalError>;
    fn powi(self, n: i32) -> Result<Self, EvalError>;
    fn apply(self, f: Func) -> Result<Self, EvalError>;
}

/// Value and first two derivatives of the quintic smoothstep
/// `S(u) = 10u³ − 15u⁴ + 6u⁵` on `[0, 1]`.
fn smoothstep(u: f64) -> (f64, f64, f64) {
    let s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    let s1 = 30.0 * u * u * (1.0 - u) * (1.0 - u);
    let s2 = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    (s, s1, s2)
}

/// `(f, f', f'')` of each built-in at `x`.
fn builtin(f: Func, x: f64) -> Result<(f64, f64, f64), EvalError> {
    Ok(match f {
        Func::Exp => {
            let e = x.exp();
            (e, e, e)
        }
        Func::Tanh => {
            let t = x.tanh();
            let s = 1.0 - t * t;
            (t, s, -2.0 * t * s)
        }
        Func::Sin => (x.sin(), x.cos(), -x.sin()),
        Func::Cos => (x.cos(), -x.sin(), -x.cos()),
        Func::Sqrt => {
            if x < 0.0 {
                return Err(EvalError::Domain { func: "sqrt", arg: x });
            }
            let r = x.sqrt();
            (r, 0.5 / r, -0.25 / (r * x))
        }
        Func::Abs => {
            let e2 = ABS_SMOOTHING * ABS_SMOOTHING;
            let s = (x * x + e2).sqrt();
            (s, x / s, e2 / (s * s * s))
        }
        Func::Bump => {
            let ax = x.abs();
            if ax <= 1.0 {
                (1.0, 0.0, 0.0)
            } else if ax >= 2.0 {
                (0.0, 0.0, 0.0)
            } else {
                let (s, s1, s2) = smoothstep(ax - 1.0);
                (1.0 - s, -s1 * x.signum(), -s2)
            }
        }
    })
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn div(self, o: Self) -> Result<Self, EvalError> {
        if o == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(self / o)
    }
    fn powi(self, n: i32) -> Result<Self, EvalError> {
        if n < 0 && self == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(self.powi(n))
    }
    fn apply(self, f: Func) -> Result<Self, EvalError> {
        match f {
            Func::Exp => Ok(self.exp()),
            Func::Tanh => Ok(self.tanh()),
            Func::Sin => Ok(self.sin()),
            Func::Cos => Ok(self.cos()),
            Func::Sqrt if self < 0.0 => Err(EvalError::Domain { func: "sqrt", arg: self }),
            Func::Sqrt => Ok(self.sqrt()),
            _ => builtin(f, self).map(|(v, _, _)| v),
        }
    }
}

impl Scalar for Jet2 {
    fn constant(c: f64) -> Self {
        Jet2::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn div(self, o: Self) -> Result<Self, EvalError> {
        if o.v == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let r = 1.0 / o.v;
        let recip = o.chain(r, -r * r, 2.0 * r * r * r);
        Ok(self * recip)
    }
    fn powi(self, n: i32) -> Result<Self, EvalError> {
        match n {
            0 => return Ok(Jet2::constant(1.0)),
            1 => return Ok(self),
            _ => {}
        }
        if n < 0 && self.v == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let v = self.v;
        let nf = n as f64;
        let f0 = v.powi(n);
        let f1 = nf * v.powi(n - 1);
        let f2 = nf * (nf - 1.0) * v.powi(n - 2);
        Ok(self.chain(f0, f1, f2))
    }
    fn apply(self, f: Func) -> Result<Self, EvalError> {
        if f == Func::Sqrt && self.v == 0.0 && !self.is_constant() {
            return Err(EvalError::Domain { func: "sqrt", arg: 0.0 });
        }
        if f == Func::Sqrt && self.is_constant() {
            return Scalar::apply(self.v, f).map(Jet2::constant);
        }
        let (f0, f1, f2) = builtin(f, self.v)?;
        Ok(self.chain(f0, f1, f2))
    }
}
