//! Expressions over the jet space of a second-order equation with one delay.
//!
//! Rational constants are exact. Every operation returns a fresh tree; call
//! [`normalize`] to obtain the canonical form used for equality.

mod calculus;
mod collect;
mod eval;
mod normal;
mod parse;
mod render;

pub use calculus::{diff, diff_wrt, rename_fn, shift, substitute, substitute_fn, Bindings, Wrt};
pub use collect::{collect, JetMonomial};
pub use eval::{eval_numeric, Env, FnTable, NoFunctions};
pub use normal::{normalize, same_up_to_scale};
pub use parse::{parse, parse_with, ParseOptions};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

pub type Rational = BigRational;

/// Highest derivative order allowed on a coefficient function.
pub const MAX_COEFF_ORDER: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("derivative order of `{0}` would exceed 3")]
    DerivativeOrder(String),
    #[error("expression is already delayed")]
    DoubleShift,
    #[error("expression is not polynomial in {0}")]
    NonPolynomial(String),
    #[error("unbound atom `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0}")]
    Invalid(String),
}

/// Jet coordinates: t, x(t), x(t-r), x'(t), x'(t-r), x''(t), x''(t-r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JetVar {
    T,
    X,
    XR,
    X1,
    X1R,
    X2,
    X2R,
}

impl JetVar {
    pub const ALL: [JetVar; 7] = [
        JetVar::T,
        JetVar::X,
        JetVar::XR,
        JetVar::X1,
        JetVar::X1R,
        JetVar::X2,
        JetVar::X2R,
    ];

    /// The five coordinates the linear residual is split on.
    pub const SPLIT: [JetVar; 5] = [JetVar::X, JetVar::XR, JetVar::X1, JetVar::X1R, JetVar::X2R];

    pub fn name(self) -> &'static str {
        match self {
            JetVar::T => "t",
            JetVar::X => "x",
            JetVar::XR => "xr",
            JetVar::X1 => "x1",
            JetVar::X1R => "x1r",
            JetVar::X2 => "x2",
            JetVar::X2R => "x2r",
        }
    }

    pub fn is_delayed(self) -> bool {
        matches!(self, JetVar::XR | JetVar::X1R | JetVar::X2R)
    }

    pub fn delayed(self) -> Option<JetVar> {
        match self {
            JetVar::X => Some(JetVar::XR),
            JetVar::X1 => Some(JetVar::X1R),
            JetVar::X2 => Some(JetVar::X2R),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Argument of a coefficient function: `t` or `t-r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FnArg {
    Now,
    Delayed,
}

/// A named function of t such as `b(t)`, `beta''(t-r)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoeffFn {
    pub name: String,
    pub arg: FnArg,
    pub order: u8,
}

impl CoeffFn {
    pub fn new(name: &str, arg: FnArg, order: u8) -> Self {
        CoeffFn { name: name.to_string(), arg, order }
    }
}

/// An unknown function of (t, x) with mixed partials, evaluated at (t, x) or
/// at (t-r, x(t-r)). Used for the generic ansatz.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldFn {
    pub name: String,
    pub arg: FnArg,
    pub dt: u8,
    pub dx: u8,
}

/// Named constant, optionally bound to an exact value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub value: Option<Rational>,
}

impl Param {
    fn sort_key(&self) -> (&str, u64) {
        let split = self.name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, tail) = self.name.split_at(split);
        (head, tail.parse().unwrap_or(0))
    }
}

impl PartialOrd for Param {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Param {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| self.name.cmp(&other.name))
            .then_with(|| self.value.cmp(&other.value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Exp => "exp",
            Elementary::Ln => "ln",
            Elementary::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Num(Rational),
    Pi,
    Param(Param),
    Coeff(CoeffFn),
    Field(FieldFn),
    Var(JetVar),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, i64),
    Apply(Elementary, Box<Expr>),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Num(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::Num(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Num(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::Num(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn var(v: JetVar) -> Expr {
        Expr::Var(v)
    }

    pub fn t() -> Expr {
        Expr::Var(JetVar::T)
    }

    pub fn x() -> Expr {
        Expr::Var(JetVar::X)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(Param { name: name.to_string(), value: None })
    }

    pub fn bound_param(name: &str, value: Rational) -> Expr {
        Expr::Param(Param { name: name.to_string(), value: Some(value) })
    }

    /// The delay symbol `r`.
    pub fn delay() -> Expr {
        Expr::param("r")
    }

    pub fn coeff(name: &str) -> Expr {
        Expr::Coeff(CoeffFn::new(name, FnArg::Now, 0))
    }

    pub fn coeff_d(name: &str, order: u8) -> Expr {
        Expr::Coeff(CoeffFn::new(name, FnArg::Now, order))
    }

    pub fn coeff_r(name: &str, order: u8) -> Expr {
        Expr::Coeff(CoeffFn::new(name, FnArg::Delayed, order))
    }

    pub fn field(name: &str) -> Expr {
        Expr::Field(FieldFn { name: name.to_string(), arg: FnArg::Now, dt: 0, dx: 0 })
    }

    pub fn pow(self, n: i64) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn apply(f: Elementary, arg: Expr) -> Expr {
        Expr::Apply(f, Box::new(arg))
    }

    pub fn sin(self) -> Expr {
        Expr::apply(Elementary::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::apply(Elementary::Cos, self)
    }

    pub fn exp(self) -> Expr {
        Expr::apply(Elementary::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::apply(Elementary::Ln, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::apply(Elementary::Sqrt, self)
    }

    pub fn recip(self) -> Expr {
        self.pow(-1)
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Expr::Num(q) => Some(q),
            _ => None,
        }
    }

    /// True when the expression is literally the rational zero.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_zero())
    }

    /// Zero after normalization.
    pub fn is_zero_nf(&self) -> bool {
        normalize(self).is_zero_literal()
    }

    /// Visits every node, children first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().for_each(|x| x.walk(f)),
            Expr::Pow(b, _) | Expr::Apply(_, b) => b.walk(f),
            _ => {}
        }
        f(self);
    }

    pub fn contains_var(&self, v: JetVar) -> bool {
        let mut hit = false;
        self.walk(&mut |e| {
            if *e == Expr::Var(v) {
                hit = true;
            }
        });
        hit
    }

    pub fn contains_delayed(&self) -> bool {
        let mut hit = false;
        self.walk(&mut |e| match e {
            Expr::Var(v) if v.is_delayed() => hit = true,
            Expr::Coeff(c) if c.arg == FnArg::Delayed => hit = true,
            Expr::Field(c) if c.arg == FnArg::Delayed => hit = true,
            _ => {}
        });
        hit
    }

    pub fn contains_field(&self) -> bool {
        let mut hit = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Field(_)) {
                hit = true;
            }
        });
        hit
    }

    /// Names of coefficient functions present.
    pub fn coeff_names(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Coeff(c) = e {
                out.insert(c.name.clone());
            }
        });
        out
    }

    pub fn max_coeff_order(&self, name: &str) -> Option<u8> {
        let mut best = None;
        self.walk(&mut |e| {
            if let Expr::Coeff(c) = e {
                if c.name == name {
                    best = Some(best.map_or(c.order, |b: u8| b.max(c.order)));
                }
            }
        });
        best
    }

    /// Unbound parameter names.
    pub fn param_names(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Param(p) = e {
                if p.value.is_none() {
                    out.insert(p.name.clone());
                }
            }
        });
        out
    }

    pub fn is_negative_rational(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_negative())
    }
}

fn flat_push(out: &mut Vec<Expr>, e: Expr, sum: bool) {
    match (e, sum) {
        (Expr::Sum(xs), true) => out.extend(xs),
        (Expr::Product(xs), false) => out.extend(xs),
        (e, _) => out.push(e),
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        let mut v = Vec::new();
        flat_push(&mut v, self, true);
        flat_push(&mut v, rhs, true);
        Expr::Sum(v)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        let mut v = Vec::new();
        flat_push(&mut v, self, false);
        flat_push(&mut v, rhs, false);
        Expr::Product(v)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::int(-1) * self
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        self * rhs.recip()
    }
}

macro_rules! ref_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                std::ops::$tr::$m(self.clone(), rhs.clone())
            }
        }
    )*};
}
ref_ops!(Add add, Sub sub, Mul mul, Div div);

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render::render(self))
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Expr, ExprError> {
        parse(s)
    }
}

/// Sum of a list of expressions.
pub fn sum_of(items: impl IntoIterator<Item = Expr>) -> Expr {
    let v: Vec<Expr> = items.into_iter().collect();
    if v.is_empty() {
        Expr::zero()
    } else {
        Expr::Sum(v)
    }
}

/// Product of a list of expressions.
pub fn product_of(items: impl IntoIterator<Item = Expr>) -> Expr {
    let v: Vec<Expr> = items.into_iter().collect();
    if v.is_empty() {
        Expr::one()
    } else {
        Expr::Product(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_order_is_natural() {
        let mut v = vec![Expr::param("c10"), Expr::param("c2"), Expr::param("c1")];
        v.sort();
        let names: Vec<String> = v.iter().map(|e| e.to_string()).collect();
        assert_eq!(names, ["c1", "c2", "c10"]);
    }

    #[test]
    fn jet_order() {
        let mut v = JetVar::ALL.to_vec();
        v.reverse();
        v.sort();
        assert_eq!(v, JetVar::ALL.to_vec());
    }
}
