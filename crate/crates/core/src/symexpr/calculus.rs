//! Differentiation, delay shift and substitution.

use super::{normalize, CoeffFn, Elementary, Expr, ExprError, FieldFn, FnArg, JetVar, MAX_COEFF_ORDER};
use std::collections::BTreeMap;

/// What to differentiate with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrt {
    /// A jet coordinate other than t.
    Jet(JetVar),
    /// Explicit time: hits t, f(t) and f(t-r) alike.
    Time,
    /// Only the current-time atoms t, f(t), w(t,x).
    TimeNow,
    /// Only the delayed-argument atoms f(t-r), w(t-r,xr).
    TimeDelayed,
}

/// Partial derivative with respect to a jet variable; `JetVar::T` means
/// explicit time (coefficient functions are differentiated by the chain rule).
pub fn diff(e: &Expr, v: JetVar) -> Result<Expr, ExprError> {
    let w = if v == JetVar::T { Wrt::Time } else { Wrt::Jet(v) };
    diff_wrt(e, w)
}

pub fn diff_wrt(e: &Expr, w: Wrt) -> Result<Expr, ExprError> {
    Ok(normalize(&d(e, w)?))
}

fn time_hits(arg: FnArg, w: Wrt) -> bool {
    match w {
        Wrt::Time => true,
        Wrt::TimeNow => arg == FnArg::Now,
        Wrt::TimeDelayed => arg == FnArg::Delayed,
        Wrt::Jet(_) => false,
    }
}

fn d(e: &Expr, w: Wrt) -> Result<Expr, ExprError> {
    Ok(match e {
        Expr::Num(_) | Expr::Pi | Expr::Param(_) => Expr::zero(),
        Expr::Var(v) => {
            let hit = match w {
                Wrt::Jet(u) => u == *v,
                Wrt::Time | Wrt::TimeNow => *v == JetVar::T,
                Wrt::TimeDelayed => false,
            };
            if hit {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Coeff(c) => {
            if time_hits(c.arg, w) {
                if c.order >= MAX_COEFF_ORDER {
                    return Err(ExprError::DerivativeOrder(c.name.clone()));
                }
                Expr::Coeff(CoeffFn { order: c.order + 1, ..c.clone() })
            } else {
                Expr::zero()
            }
        }
        Expr::Field(f) => {
            if time_hits(f.arg, w) {
                Expr::Field(FieldFn { dt: f.dt + 1, ..f.clone() })
            } else {
                let hit = matches!(
                    (w, f.arg),
                    (Wrt::Jet(JetVar::X), FnArg::Now) | (Wrt::Jet(JetVar::XR), FnArg::Delayed)
                );
                if hit {
                    Expr::Field(FieldFn { dx: f.dx + 1, ..f.clone() })
                } else {
                    Expr::zero()
                }
            }
        }
        Expr::Sum(xs) => {
            let mut out = Vec::with_capacity(xs.len());
            for x in xs {
                out.push(d(x, w)?);
            }
            Expr::Sum(out)
        }
        Expr::Product(xs) => {
            let mut terms = Vec::new();
            for i in 0..xs.len() {
                let di = d(&xs[i], w)?;
                if di.is_zero_literal() {
                    continue;
                }
                let mut fs = xs.clone();
                fs[i] = di;
                terms.push(Expr::Product(fs));
            }
            super::sum_of(terms)
        }
        Expr::Pow(b, n) => {
            let db = d(b, w)?;
            if db.is_zero_literal() || *n == 0 {
                Expr::zero()
            } else {
                Expr::Product(vec![Expr::int(*n), Expr::Pow(b.clone(), n - 1), db])
            }
        }
        Expr::Apply(f, a) => {
            let da = d(a, w)?;
            if da.is_zero_literal() {
                return Ok(Expr::zero());
            }
            let u = (**a).clone();
            let outer = match f {
                Elementary::Sin => u.cos(),
                Elementary::Cos => -(u.sin()),
                Elementary::Exp => u.exp(),
                Elementary::Ln => u.recip(),
                Elementary::Sqrt => Expr::rat(1, 2) * u.sqrt().recip(),
            };
            outer * da
        }
    })
}

/// Delays every atom: t -> t-r, x -> x(t-r), f(t) -> f(t-r).
pub fn shift(e: &Expr) -> Result<Expr, ExprError> {
    Ok(normalize(&sh(e)?))
}

fn sh(e: &Expr) -> Result<Expr, ExprError> {
    Ok(match e {
        Expr::Num(_) | Expr::Pi | Expr::Param(_) => e.clone(),
        Expr::Var(JetVar::T) => Expr::t() - Expr::delay(),
        Expr::Var(v) => Expr::Var(v.delayed().ok_or(ExprError::DoubleShift)?),
        Expr::Coeff(c) => {
            if c.arg == FnArg::Delayed {
                return Err(ExprError::DoubleShift);
            }
            Expr::Coeff(CoeffFn { arg: FnArg::Delayed, ..c.clone() })
        }
        Expr::Field(c) => {
            if c.arg == FnArg::Delayed {
                return Err(ExprError::DoubleShift);
            }
            Expr::Field(FieldFn { arg: FnArg::Delayed, ..c.clone() })
        }
        Expr::Sum(xs) => Expr::Sum(xs.iter().map(sh).collect::<Result<_, _>>()?),
        Expr::Product(xs) => Expr::Product(xs.iter().map(sh).collect::<Result<_, _>>()?),
        Expr::Pow(b, n) => Expr::Pow(Box::new(sh(b)?), *n),
        Expr::Apply(f, a) => Expr::Apply(*f, Box::new(sh(a)?)),
    })
}

/// Simultaneous replacement of atoms (jet variables, coefficient functions,
/// parameters) by expressions.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    map: BTreeMap<Expr, Expr>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, atom: Expr, value: Expr) -> Self {
        self.insert(atom, value);
        self
    }

    pub fn insert(&mut self, atom: Expr, value: Expr) {
        let key = match atom {
            Expr::Param(mut p) => {
                p.value = None;
                Expr::Param(p)
            }
            other => other,
        };
        self.map.insert(key, value);
    }

    fn lookup(&self, e: &Expr) -> Option<&Expr> {
        match e {
            Expr::Param(p) if p.value.is_some() => {
                let mut q = p.clone();
                q.value = None;
                self.map.get(&Expr::Param(q))
            }
            _ => self.map.get(e),
        }
    }
}

pub fn substitute(e: &Expr, b: &Bindings) -> Expr {
    normalize(&subst(e, &|x| b.lookup(x).cloned()))
}

fn subst(e: &Expr, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
    if let Some(v) = f(e) {
        return v;
    }
    match e {
        Expr::Sum(xs) => Expr::Sum(xs.iter().map(|x| subst(x, f)).collect()),
        Expr::Product(xs) => Expr::Product(xs.iter().map(|x| subst(x, f)).collect()),
        Expr::Pow(b, n) => Expr::Pow(Box::new(subst(b, f)), *n),
        Expr::Apply(g, a) => Expr::Apply(*g, Box::new(subst(a, f))),
        _ => e.clone(),
    }
}

/// Replaces the function `name` of t by `replacement` (an expression in t),
/// mapping derivatives and delayed arguments consistently.
pub fn substitute_fn(e: &Expr, name: &str, replacement: &Expr) -> Result<Expr, ExprError> {
    let mut now = vec![normalize(replacement)];
    let max = e.max_coeff_order(name).unwrap_or(0);
    for k in 0..max as usize {
        let next = diff(&now[k], JetVar::T)?;
        now.push(next);
    }
    let mut delayed = Vec::with_capacity(now.len());
    let mut need_delayed = false;
    e.walk(&mut |x| {
        if let Expr::Coeff(c) = x {
            if c.name == name && c.arg == FnArg::Delayed {
                need_delayed = true;
            }
        }
    });
    if need_delayed {
        for n in &now {
            delayed.push(shift(n)?);
        }
    }
    Ok(normalize(&subst(e, &|x| match x {
        Expr::Coeff(c) if c.name == name => Some(match c.arg {
            FnArg::Now => now[c.order as usize].clone(),
            FnArg::Delayed => delayed[c.order as usize].clone(),
        }),
        _ => None,
    })))
}

/// Renames a coefficient function, keeping orders and arguments.
pub fn rename_fn(e: &Expr, from: &str, to: &str) -> Expr {
    normalize(&subst(e, &|x| match x {
        Expr::Coeff(c) if c.name == from => Some(Expr::Coeff(CoeffFn { name: to.to_string(), ..c.clone() })),
        _ => None,
    }))
}
