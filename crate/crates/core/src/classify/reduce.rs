//! Reductions to the form without h and without the x' term.

use super::ClassifyError;
use crate::funcs::{closed_fn, FnBank, TimeFn};
use crate::nde::{CoeffDescriptor, CoeffKind, NdeSpec};
use crate::ndesolve::Trajectory;
use crate::symexpr::{diff, eval_numeric, normalize, shift, Env, Expr, JetVar};
use std::sync::Arc;

/// A solution of the nonhomogeneous equation.
#[derive(Clone)]
pub enum Particular {
    Closed(Expr),
    Numeric(Arc<Trajectory<f64>>),
}

/// x = x_bar + x1(t).
#[derive(Clone)]
pub struct Homogenized {
    pub spec: NdeSpec,
    pub particular: Option<Particular>,
    pub residual: f64,
}

fn jets_of(f: &TimeFn, t: f64, r: f64) -> Option<Env<f64>> {
    let mut env = Env::new().set(JetVar::T, t).param("r", r);
    for (v, at, n) in [
        (JetVar::X, t, 0),
        (JetVar::X1, t, 1),
        (JetVar::X2, t, 2),
        (JetVar::XR, t - r, 0),
        (JetVar::X1R, t - r, 1),
        (JetVar::X2R, t - r, 2),
    ] {
        env.put(v, f(at, n)?);
    }
    Some(env)
}

/// Drops h after checking that `particular` solves the full equation.
pub fn homogenize(spec: &NdeSpec, particular: Option<&Particular>) -> Result<Homogenized, ClassifyError> {
    if spec.h.is_zero() {
        return Ok(Homogenized { spec: spec.clone(), particular: particular.cloned(), residual: 0.0 });
    }
    let p = particular.ok_or_else(|| ClassifyError::Reduction("h != 0 needs a particular solution".into()))?;
    let lhs = spec.lhs();
    let bank = spec.bank();
    let r = spec.r.value;
    let residual = match p {
        Particular::Closed(e) => {
            let f = closed_fn(e, &spec.params(), &bank)?;
            let (lo, hi) = spec.interval.unwrap_or((spec.t0, spec.t0 + 3.0 * r));
            let mut worst: f64 = 0.0;
            for i in 0..=64 {
                let t = lo + (hi - lo) * i as f64 / 64.0;
                let env = jets_of(&f, t, r).ok_or(ClassifyError::Particular(f64::NAN))?;
                worst = worst.max(eval_numeric(&lhs, &env, &bank)?.abs());
            }
            worst
        }
        Particular::Numeric(tr) => {
            let n = tr.steps_per_delay;
            let samples: Vec<f64> =
                (1..tr.x.len() - 1).filter(|i| i % n != 0).map(|i| tr.node(i)).collect();
            let mut worst: f64 = 0.0;
            for t in samples {
                let env = tr.jets(t).map_err(ClassifyError::Solve)?;
                worst = worst.max(eval_numeric(&lhs, &env, &bank)?.abs());
            }
            worst
        }
    };
    if !(residual < 1e-6) {
        return Err(ClassifyError::Particular(residual));
    }
    let mut out = spec.clone();
    out.h = CoeffDescriptor::zero();
    Ok(Homogenized { spec: out, particular: Some(p.clone()), residual })
}

/// x = s(t) u with s = exp(-1/2 int_t0^t a).
#[derive(Clone)]
pub struct FirstDerivativeRemoval {
    pub spec: NdeSpec,
    /// s as an expression in t and the antiderivative atom `A(t)`.
    pub s: Expr,
    pub s_fn: TimeFn,
    pub identity: bool,
}

impl FirstDerivativeRemoval {
    /// (u, u', u'') at t from (x, x', x'').
    pub fn to_reduced(&self, t: f64, x: [f64; 3]) -> Option<[f64; 3]> {
        let s = [(self.s_fn)(t, 0)?, (self.s_fn)(t, 1)?, (self.s_fn)(t, 2)?];
        let u = x[0] / s[0];
        let u1 = (x[1] - s[1] * u) / s[0];
        let u2 = (x[2] - s[2] * u - 2.0 * s[1] * u1) / s[0];
        Some([u, u1, u2])
    }

    /// (x, x', x'') at t from (u, u', u'').
    pub fn to_original(&self, t: f64, u: [f64; 3]) -> Option<[f64; 3]> {
        let s = [(self.s_fn)(t, 0)?, (self.s_fn)(t, 1)?, (self.s_fn)(t, 2)?];
        Some([s[0] * u[0], s[1] * u[0] + s[0] * u[1], s[2] * u[0] + 2.0 * s[1] * u[1] + s[0] * u[2]])
    }
}

fn simpson(f: &dyn Fn(f64) -> Option<f64>, a: f64, b: f64) -> Option<f64> {
    fn rec(f: &dyn Fn(f64) -> Option<f64>, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, depth: u32) -> Option<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() < 1e-13 * (1.0 + whole.abs()) {
            return Some(left + right + (left + right - whole) / 15.0);
        }
        Some(rec(f, a, m, fa, flm, fm, left, depth - 1)? + rec(f, m, b, fm, frm, fb, right, depth - 1)?)
    }
    if a == b {
        return Some(0.0);
    }
    let (fa, fm, fb) = (f(a)?, f(0.5 * (a + b))?, f(b)?);
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 24)
}

/// Antiderivative of `a` vanishing at t0, with derivatives via `a`.
fn antiderivative(a: TimeFn, t0: f64) -> TimeFn {
    Arc::new(move |t, order| match order {
        0 => simpson(&|s| a(s, 0), t0, t),
        n => a(t, n - 1),
    })
}

fn descriptor(e: Expr, params: &std::collections::BTreeMap<String, f64>, bank: &FnBank) -> Result<CoeffDescriptor, ClassifyError> {
    let e = normalize(&e);
    if e.coeff_names().is_empty() {
        return Ok(CoeffDescriptor::closed(e));
    }
    let f = closed_fn(&e, params, bank)?;
    Ok(CoeffDescriptor::numeric(&e.to_string(), f))
}

/// E(t) = s(t-r)/s(t) = exp(1/2 int_{t-r}^t a), with E' = E g, g = (a - a_r)/2.
fn delay_ratio(a: TimeFn, r: f64) -> TimeFn {
    Arc::new(move |t, order| {
        let e = (0.5 * simpson(&|s| a(s, 0), t - r, t)?).exp();
        if order == 0 {
            return Some(e);
        }
        let g = |n: u8| -> Option<f64> { Some(0.5 * (a(t, n)? - a(t - r, n)?)) };
        let g0 = g(0)?;
        match order {
            1 => Some(e * g0),
            2 => Some(e * (g(1)? + g0 * g0)),
            3 => {
                let g1 = g(1)?;
                Some(e * (g(2)? + 3.0 * g0 * g1 + g0 * g0 * g0))
            }
            _ => None,
        }
    })
}

/// Removes the x' term with x = s u, s = exp(-1/2 int_t0^t a). Writing
/// E = s_r/s the new coefficients are
/// b2 = E (b - k a_r), c2 = c - a^2/4 - a'/2,
/// d2 = E (d - b a_r/2 + k (a_r^2/4 - a'_r/2)), k2 = k E, h2 = h/s.
pub fn remove_first_derivative(spec: &NdeSpec) -> Result<FirstDerivativeRemoval, ClassifyError> {
    let params = spec.params();
    if spec.a.is_zero() {
        return Ok(FirstDerivativeRemoval {
            spec: spec.clone(),
            s: Expr::one(),
            s_fn: crate::funcs::constant_fn(1.0),
            identity: true,
        });
    }
    let mut bank = spec.bank();
    let t0 = Expr::Num(
        num_traits::FromPrimitive::from_f64(spec.t0).ok_or_else(|| ClassifyError::Reduction("t0 not finite".into()))?,
    );
    let (anti, ratio) = match &spec.a.kind {
        CoeffKind::Constant(e) => {
            (e.clone() * (Expr::t() - t0), (Expr::rat(1, 2) * e.clone() * Expr::delay()).exp())
        }
        CoeffKind::Closed(_) | CoeffKind::Numeric(_) => {
            let a = spec.coeff_fn("a").ok_or_else(|| ClassifyError::NotConcrete("a".into()))?;
            bank.insert("A", antiderivative(a.clone(), spec.t0));
            bank.insert("E", delay_ratio(a, spec.r.value));
            (Expr::coeff("A"), Expr::coeff("E"))
        }
        CoeffKind::Symbolic => return Err(ClassifyError::NotConcrete("a".into())),
        CoeffKind::Zero => unreachable!(),
    };
    let s = normalize(&(Expr::rat(-1, 2) * anti).exp());
    let sym = |slot: &str| spec.slot(slot).unwrap().symbol(slot);
    let a = sym("a");
    let a1 = diff(&a, JetVar::T)?;
    let (ar, a1r) = (shift(&a)?, shift(&a1)?);
    let q = |n: i64| Expr::rat(1, n);
    let b2 = ratio.clone() * (sym("b") - sym("k") * ar.clone());
    let c2 = sym("c") - q(4) * a.clone().pow(2) - q(2) * a1;
    let d2 = ratio.clone() * (sym("d") - q(2) * sym("b") * ar.clone() + sym("k") * (q(4) * ar.pow(2) - q(2) * a1r));
    let k2 = sym("k") * ratio;
    let h2 = sym("h") * s.clone().recip();
    let s_fn = closed_fn(&s, &params, &bank)?;
    let (lo, hi) = spec.interval.unwrap_or((spec.t0 - spec.r.value, spec.t0 + 4.0 * spec.r.value));
    for i in 0..=200 {
        let t = lo + (hi - lo) * i as f64 / 200.0;
        match s_fn(t, 0) {
            Some(v) if v.is_finite() && v.abs() > 1e-300 => {}
            _ => return Err(ClassifyError::Reduction(format!("s(t) vanishes or overflows near t = {}", t))),
        }
    }
    let mut out = spec.clone();
    out.a = CoeffDescriptor::zero();
    out.b = descriptor(b2, &params, &bank)?;
    out.c = descriptor(c2, &params, &bank)?;
    out.d = descriptor(d2, &params, &bank)?;
    out.k = descriptor(k2, &params, &bank)?;
    out.h = descriptor(h2, &params, &bank)?;
    Ok(FirstDerivativeRemoval { spec: out, s, s_fn, identity: false })
}
