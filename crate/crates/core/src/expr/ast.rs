use std::fmt;

use super::jet::Scalar;
use super::EvalError;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Tanh,
    Sin,
    Cos,
    Sqrt,
    /// `sqrt(x² + ε²)` with ε = [`ABS_SMOOTHING`](super::ABS_SMOOTHING).
    Abs,
    /// C² plateau: 1 on `[-1, 1]`, 0 outside `[-2, 2]`, quintic smoothstep between.
    Bump,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Tanh,
        Func::Sin,
        Func::Cos,
        Func::Sqrt,
        Func::Abs,
        Func::Bump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Bump => "bump",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Index into the variable list the expression was parsed against.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Literal that prints back to something the parser accepts: negative
    /// values become a negated literal.
    pub fn constant(c: f64) -> Expr {
        if c.is_sign_negative() && c != 0.0 {
            Expr::Neg(Box::new(Expr::Num(-c)))
        } else {
            Expr::Num(c.abs())
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn eval<S: Scalar>(&self, vars: &[S]) -> Result<S, EvalError> {
        Ok(match self {
            Expr::Num(c) => S::constant(*c),
            Expr::Var(i) => vars[*i],
            Expr::Neg(a) => a.eval(vars)?.neg(),
            Expr::Add(a, b) => a.eval(vars)?.add(b.eval(vars)?),
            Expr::Sub(a, b) => a.eval(vars)?.sub(b.eval(vars)?),
            Expr::Mul(a, b) => a.eval(vars)?.mul(b.eval(vars)?),
            Expr::Div(a, b) => a.eval(vars)?.div(b.eval(vars)?)?,
            Expr::Pow(a, n) => a.eval(vars)?.powi(*n)?,
            Expr::Call(f, a) => a.eval(vars)?.apply(*f)?,
        })
    }

    /// Replace every occurrence of variable `var` with `with`.
    pub fn substitute(&self, var: usize, with: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(var, with));
        match self {
            Expr::Num(c) => Expr::Num(*c),
            Expr::Var(i) if *i == var => with.clone(),
            Expr::Var(i) => Expr::Var(*i),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, n) => Expr::Pow(sub(a), *n),
            Expr::Call(f, a) => Expr::Call(*f, sub(a)),
        }
    }

    /// Fully parenthesized rendering; reparses to the same tree.
    pub fn display<'a>(&'a self, vars: &'a [&'a str]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, vars }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    vars: &'a [&'a str],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = self.vars;
        let d = move |e: &'_ Expr| ExprDisplay { expr: e, vars }.to_string();
        match self.expr {
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(i) => f.write_str(self.vars[*i]),
            Expr::Neg(a) => write!(f, "(-{})", d(a)),
            Expr::Add(a, b) => write!(f, "({} + {})", d(a), d(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", d(a), d(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", d(a), d(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", d(a), d(b)),
            Expr::Pow(a, n) => write!(f, "({} ^ {n})", d(a)),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), d(a)),
        }
    }
}
