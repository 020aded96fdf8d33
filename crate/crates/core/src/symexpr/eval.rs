//! Floating point evaluation.

use super::{Elementary, Expr, ExprError, FnArg};
use crate::scalar::Real;
use crate::symexpr::JetVar;
use num_traits::ToPrimitive;
use std::collections::BTreeMap;

/// Numeric values of coefficient functions and their derivatives.
pub trait FnTable<S> {
    /// `name^(order)` at time `t`, or `None` when unknown.
    fn coeff(&self, name: &str, t: S, order: u8) -> Option<S>;

    /// Mixed partial of a two-variable function, when supported.
    fn field(&self, _name: &str, _t: S, _x: S, _dt: u8, _dx: u8) -> Option<S> {
        None
    }
}

/// A table with no functions.
pub struct NoFunctions;

impl<S> FnTable<S> for NoFunctions {
    fn coeff(&self, _: &str, _: S, _: u8) -> Option<S> {
        None
    }
}

impl<S, F> FnTable<S> for F
where
    F: Fn(&str, S, u8) -> Option<S>,
{
    fn coeff(&self, name: &str, t: S, order: u8) -> Option<S> {
        self(name, t, order)
    }
}

/// Values of jet variables and parameters.
#[derive(Debug, Clone)]
pub struct Env<S> {
    pub jets: [Option<S>; 7],
    pub params: BTreeMap<String, S>,
}

impl<S: Real> Default for Env<S> {
    fn default() -> Self {
        Env { jets: [None; 7], params: BTreeMap::new() }
    }
}

impl<S: Real> Env<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, v: JetVar, value: S) -> Self {
        self.jets[v.index()] = Some(value);
        self
    }

    pub fn put(&mut self, v: JetVar, value: S) {
        self.jets[v.index()] = Some(value);
    }

    pub fn param(mut self, name: &str, value: S) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, v: JetVar) -> Option<S> {
        self.jets[v.index()]
    }
}

/// Evaluates `e`; every atom must be bound.
pub fn eval_numeric<S: Real>(e: &Expr, env: &Env<S>, table: &dyn FnTable<S>) -> Result<S, ExprError> {
    let t_now = || env.get(JetVar::T).ok_or_else(|| ExprError::Unbound("t".into()));
    let delay = || env.params.get("r").copied().ok_or_else(|| ExprError::Unbound("r".into()));
    let at = |arg: FnArg| -> Result<S, ExprError> {
        let t = t_now()?;
        Ok(match arg {
            FnArg::Now => t,
            FnArg::Delayed => t - delay()?,
        })
    };
    Ok(match e {
        Expr::Num(q) => S::lit(q.to_f64().unwrap_or(f64::NAN)),
        Expr::Pi => S::PI(),
        Expr::Param(p) => match (&p.value, env.params.get(&p.name)) {
            (Some(v), _) => S::lit(v.to_f64().unwrap_or(f64::NAN)),
            (None, Some(v)) => *v,
            (None, None) => return Err(ExprError::Unbound(p.name.clone())),
        },
        Expr::Var(v) => env.get(*v).ok_or_else(|| ExprError::Unbound(v.name().into()))?,
        Expr::Coeff(c) => {
            let t = at(c.arg)?;
            table.coeff(&c.name, t, c.order).ok_or_else(|| ExprError::Unbound(e.to_string()))?
        }
        Expr::Field(f) => {
            let t = at(f.arg)?;
            let xv = if f.arg == FnArg::Now { JetVar::X } else { JetVar::XR };
            let x = env.get(xv).ok_or_else(|| ExprError::Unbound(xv.name().into()))?;
            table.field(&f.name, t, x, f.dt, f.dx).ok_or_else(|| ExprError::Unbound(e.to_string()))?
        }
        Expr::Sum(xs) => {
            let mut s = S::zero();
            for x in xs {
                s = s + eval_numeric(x, env, table)?;
            }
            s
        }
        Expr::Product(xs) => {
            let mut s = S::one();
            for x in xs {
                s = s * eval_numeric(x, env, table)?;
            }
            s
        }
        Expr::Pow(b, n) => {
            let v = eval_numeric(b, env, table)?;
            if *n < 0 && v == S::zero() {
                return Err(ExprError::Domain("division by zero".into()));
            }
            v.powi(*n as i32)
        }
        Expr::Apply(f, a) => {
            let v = eval_numeric(a, env, table)?;
            match f {
                Elementary::Sin => v.sin(),
                Elementary::Cos => v.cos(),
                Elementary::Exp => v.exp(),
                Elementary::Ln => {
                    if v <= S::zero() {
                        return Err(ExprError::Domain("ln of nonpositive value".into()));
                    }
                    v.ln()
                }
                Elementary::Sqrt => {
                    if v < S::zero() {
                        return Err(ExprError::Domain("sqrt of negative value".into()));
                    }
                    v.sqrt()
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    #[test]
    fn examples() {
        let env = Env::<f64>::new().set(JetVar::T, 0.0);
        assert_eq!(eval_numeric(&parse("sin(t)").unwrap(), &env, &NoFunctions).unwrap(), 0.0);
        let table = |name: &str, _t: f64, order: u8| (name == "beta" && order == 1).then_some(0.0);
        let env = Env::<f64>::new().set(JetVar::T, 0.0).set(JetVar::X, 3.0).param("c1", 2.0);
        let e = parse("(beta'(t) + c1)/2*x").unwrap();
        assert_eq!(eval_numeric(&e, &env, &table).unwrap(), 3.0);
        let env = Env::<f64>::new().set(JetVar::T, 1.5);
        assert_eq!(eval_numeric(&parse("2*t").unwrap(), &env, &NoFunctions).unwrap(), 3.0);
    }

    #[test]
    fn errors() {
        let env = Env::<f64>::new().set(JetVar::T, -1.0);
        assert!(matches!(eval_numeric(&parse("ln(t)").unwrap(), &env, &NoFunctions), Err(ExprError::Domain(_))));
        assert!(matches!(eval_numeric(&parse("x").unwrap(), &env, &NoFunctions), Err(ExprError::Unbound(_))));
    }

    #[test]
    fn single_precision() {
        let env = Env::<f32>::new().set(JetVar::T, 0.5);
        let v = eval_numeric(&parse("t^2 + 1/4").unwrap(), &env, &NoFunctions).unwrap();
        assert!((v - 0.5f32).abs() < 1e-6);
    }
}
