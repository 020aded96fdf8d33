//! Zero testing: normal form first, then sampling over random instances.

use crate::funcs::{FnBank, PlaneFn, TimeFn};
use crate::symexpr::{
    eval_numeric, normalize, substitute, substitute_fn, Bindings, CoeffFn, Env, Expr, FieldFn, JetVar,
    MAX_COEFF_ORDER,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Property assumed for a named function of t.
#[derive(Debug, Clone, PartialEq)]
pub enum Property {
    NonZero,
    Constant,
    /// f(t) = f(t - r).
    DelayPeriodic,
    /// f(t) equals the given expression in t.
    Equals(Expr),
    /// f solves `relation = 0`, which is linear in the second derivative of f
    /// with coefficient one.
    Solves(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption {
    pub function: String,
    pub property: Property,
}

impl Assumption {
    pub fn new(function: &str, property: Property) -> Self {
        Assumption { function: function.to_string(), property }
    }
    pub fn nonzero(function: &str) -> Self {
        Self::new(function, Property::NonZero)
    }
    pub fn constant(function: &str) -> Self {
        Self::new(function, Property::Constant)
    }
    pub fn periodic(function: &str) -> Self {
        Self::new(function, Property::DelayPeriodic)
    }
    pub fn equals(function: &str, e: Expr) -> Self {
        Self::new(function, Property::Equals(e))
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = &self.function;
        match &self.property {
            Property::NonZero => write!(f, "{}(t) != 0", n),
            Property::Constant => write!(f, "{}(t) = const", n),
            Property::DelayPeriodic => write!(f, "{}(t) = {}(t-r)", n, n),
            Property::Equals(e) => write!(f, "{}(t) = {}", n, e),
            Property::Solves(e) => write!(f, "{} solves {} = 0", n, e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMethod {
    Symbolic,
    Sampled,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroVerdict {
    pub zero: bool,
    pub method: ZeroMethod,
    pub evaluated: usize,
    pub skipped: usize,
    pub max_residual: f64,
}

/// Sampling box and instance configuration.
#[derive(Debug, Clone)]
pub struct ZeroConfig {
    pub samples: usize,
    pub t_range: (f64, f64),
    pub jet_range: f64,
    pub tol: f64,
    /// Fixed parameter values; others are drawn at random.
    pub params: BTreeMap<String, f64>,
    /// Known functions; others get random instances.
    pub bank: FnBank,
    pub seed: u64,
}

impl Default for ZeroConfig {
    fn default() -> Self {
        ZeroConfig {
            samples: 64,
            t_range: (0.1, 4.0),
            jet_range: 2.0,
            tol: 1e-9,
            params: BTreeMap::new(),
            bank: FnBank::new(),
            seed: 0x5eed,
        }
    }
}

/// Applies the rewriting assumptions symbolically.
pub fn apply_assumptions(e: &Expr, assumptions: &[Assumption]) -> Expr {
    let mut out = normalize(e);
    for a in assumptions {
        out = match &a.property {
            Property::Equals(v) => substitute_fn(&out, &a.function, v).unwrap_or(out),
            Property::Solves(rel) => {
                let atom = Expr::coeff_d(&a.function, 2);
                let value = normalize(&(atom.clone() - rel.clone()));
                let mut o = substitute(&out, &Bindings::new().with(atom, value.clone()));
                if let Ok(shifted) = crate::symexpr::shift(&value) {
                    o = substitute(&o, &Bindings::new().with(Expr::coeff_r(&a.function, 2), shifted));
                }
                o
            }
            Property::Constant => {
                let mut b = Bindings::new().with(Expr::coeff_r(&a.function, 0), Expr::coeff(&a.function));
                for n in 1..=MAX_COEFF_ORDER {
                    b.insert(Expr::coeff_d(&a.function, n), Expr::zero());
                    b.insert(Expr::coeff_r(&a.function, n), Expr::zero());
                }
                substitute(&out, &b)
            }
            Property::DelayPeriodic => {
                let mut b = Bindings::new();
                for n in 0..=MAX_COEFF_ORDER {
                    b.insert(Expr::coeff_r(&a.function, n), Expr::coeff_d(&a.function, n));
                }
                substitute(&out, &b)
            }
            Property::NonZero => out,
        };
    }
    out
}

pub fn is_zero(e: &Expr, assumptions: &[Assumption]) -> ZeroVerdict {
    is_zero_with(e, assumptions, &ZeroConfig::default())
}

pub fn is_zero_with(e: &Expr, assumptions: &[Assumption], cfg: &ZeroConfig) -> ZeroVerdict {
    let reduced = apply_assumptions(e, assumptions);
    if reduced.is_zero_literal() {
        return ZeroVerdict { zero: true, method: ZeroMethod::Symbolic, evaluated: 0, skipped: 0, max_residual: 0.0 };
    }
    sample(&reduced, assumptions, cfg)
}

/// Van der Corput radical inverse.
fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// a0 + sum_j (a_j cos(j w t) + b_j sin(j w t)).
#[derive(Debug, Clone)]
pub struct TrigPoly {
    pub a0: f64,
    pub w: f64,
    pub terms: Vec<(f64, f64)>,
}

impl TrigPoly {
    pub fn eval(&self, t: f64, order: u8) -> f64 {
        let mut s = if order == 0 { self.a0 } else { 0.0 };
        for (j, (a, b)) in self.terms.iter().enumerate() {
            let f = (j + 1) as f64 * self.w;
            let x = f * t;
            let (c, sn) = (x.cos(), x.sin());
            let fk = f.powi(order as i32);
            // derivatives cycle cos -> -sin -> -cos -> sin
            let (dc, ds) = match order % 4 {
                0 => (c, sn),
                1 => (-sn, c),
                2 => (-c, -sn),
                _ => (sn, -c),
            };
            s += fk * (a * dc + b * ds);
        }
        s
    }

    pub fn random(rng: &mut ChaCha8Rng, props: &[&Property], r: f64) -> TrigPoly {
        let constant = props.iter().any(|p| matches!(p, Property::Constant));
        let periodic = props.iter().any(|p| matches!(p, Property::DelayPeriodic));
        let nonzero = props.iter().any(|p| matches!(p, Property::NonZero));
        let w = if periodic { 2.0 * PI / r } else { rng.gen_range(0.5..1.5) };
        let terms: Vec<(f64, f64)> = if constant {
            Vec::new()
        } else {
            (0..3).map(|j| {
                let s = 1.0 / (j + 1) as f64;
                (s * rng.gen_range(-1.0..1.0), s * rng.gen_range(-1.0..1.0))
            }).collect()
        };
        let mut a0: f64 = rng.gen_range(-1.0..1.0);
        if nonzero {
            let amp: f64 = terms.iter().map(|(a, b)| a.abs() + b.abs()).sum();
            a0 = a0.signum() * (amp + 0.5 + a0.abs());
        }
        TrigPoly { a0, w, terms }
    }
}

/// Random polynomial in x of degree three with trigonometric coefficients.
fn random_plane(rng: &mut ChaCha8Rng) -> PlaneFn {
    let coeffs: Vec<TrigPoly> = (0..4).map(|_| TrigPoly::random(rng, &[], 1.0)).collect();
    Arc::new(move |t, x, dt, dx| {
        let mut s = 0.0;
        for (p, c) in coeffs.iter().enumerate() {
            if (dx as usize) > p {
                continue;
            }
            let falling: f64 = ((p - dx as usize + 1)..=p).map(|v| v as f64).product();
            s += c.eval(t, dt) * falling * x.powi((p - dx as usize) as i32);
        }
        Some(s)
    })
}

struct Instance {
    bank: FnBank,
    params: BTreeMap<String, f64>,
}

fn needed(e: &Expr) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut time = BTreeSet::new();
    let mut plane = BTreeSet::new();
    e.walk(&mut |x| match x {
        Expr::Coeff(CoeffFn { name, .. }) => {
            time.insert(name.clone());
        }
        Expr::Field(FieldFn { name, .. }) => {
            plane.insert(name.clone());
        }
        _ => {}
    });
    (time, plane)
}

fn make_instance(e: &Expr, assumptions: &[Assumption], cfg: &ZeroConfig, rng: &mut ChaCha8Rng) -> Instance {
    let mut params = cfg.params.clone();
    for p in e.param_names() {
        if !params.contains_key(&p) {
            let v = if p == "r" { rng.gen_range(0.5..2.0) } else { rng.gen_range(-2.0..2.0) };
            params.insert(p, v);
        }
    }
    let r = params.get("r").copied().unwrap_or(1.0);
    let (time, plane) = needed(e);
    let mut bank = cfg.bank.clone();
    for name in time {
        if bank.contains(&name) {
            continue;
        }
        let props: Vec<&Property> = assumptions.iter().filter(|a| a.function == name).map(|a| &a.property).collect();
        let tp = TrigPoly::random(rng, &props, r);
        let f: TimeFn = Arc::new(move |t, order| Some(tp.eval(t, order)));
        bank.insert(&name, f);
    }
    for name in plane {
        if !bank.contains(&name) {
            bank.insert_plane(&name, random_plane(rng));
        }
    }
    Instance { bank, params }
}

fn sample(e: &Expr, assumptions: &[Assumption], cfg: &ZeroConfig) -> ZeroVerdict {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batches = 4usize.min(cfg.samples.max(1));
    let instances: Vec<Instance> = (0..batches).map(|_| make_instance(e, assumptions, cfg, &mut rng)).collect();
    let terms: Vec<Expr> = match e {
        Expr::Sum(xs) => xs.clone(),
        other => vec![other.clone()],
    };
    let results: Vec<Option<(f64, f64)>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let inst = &instances[i % batches];
            let h = |d: usize| halton(i + 1, PRIMES[d]);
            let (lo, hi) = cfg.t_range;
            let mut env = Env::<f64>::new().set(JetVar::T, lo + (hi - lo) * h(0));
            for (d, v) in JetVar::ALL.iter().skip(1).enumerate() {
                env.put(*v, cfg.jet_range * (2.0 * h(d + 1) - 1.0));
            }
            env.params = inst.params.clone();
            let mut value = 0.0;
            let mut scale: f64 = 1.0;
            for term in &terms {
                let v = eval_numeric(term, &env, &inst.bank).ok()?;
                if !v.is_finite() {
                    return None;
                }
                value += v;
                scale = scale.max(v.abs());
            }
            Some((value.abs(), value.abs() / scale))
        })
        .collect();
    let mut evaluated = 0;
    let mut skipped = 0;
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for r in results {
        match r {
            Some((a, rel)) => {
                evaluated += 1;
                max_abs = max_abs.max(a);
                max_rel = max_rel.max(rel);
            }
            None => skipped += 1,
        }
    }
    ZeroVerdict {
        zero: evaluated > 0 && max_rel < cfg.tol,
        method: ZeroMethod::Sampled,
        evaluated,
        skipped,
        max_residual: max_abs,
    }
}

/// f(t) = f(t - r) on 50 points of [t0, t0 + 3r].
pub fn delay_periodic(f: &TimeFn, r: f64, t0: f64) -> bool {
    (0..50).all(|i| {
        let t = t0 + 3.0 * r * i as f64 / 49.0;
        match (f(t, 0), f(t - r, 0)) {
            (Some(a), Some(b)) => (a - b).abs() < 1e-9,
            _ => false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn examples() {
        let v = is_zero(&Expr::zero(), &[]);
        assert!(v.zero && v.method == ZeroMethod::Symbolic);
        let v = is_zero(&p("sin(t)^2 + cos(t)^2 - 1"), &[]);
        assert!(v.zero && v.method == ZeroMethod::Sampled);
        assert!(!is_zero(&p("beta(t)*k'(t)"), &[Assumption::nonzero("beta")]).zero);
    }

    #[test]
    fn assumptions_rewrite() {
        assert!(is_zero(&p("b(t) - b(t-r)"), &[Assumption::periodic("b")]).method == ZeroMethod::Symbolic);
        assert!(is_zero(&p("beta(t)*k'(t)"), &[Assumption::constant("k")]).zero);
        assert!(is_zero(&p("b(t) - t^2"), &[Assumption::equals("b", p("t^2"))]).zero);
        let rel = p("rho''(t) + rho(t-r)");
        let v = is_zero(&p("rho''(t) + rho(t-r)"), &[Assumption::new("rho", Property::Solves(rel))]);
        assert!(v.zero && v.method == ZeroMethod::Symbolic);
    }

    #[test]
    fn periodic_instances_are_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tp = TrigPoly::random(&mut rng, &[&Property::DelayPeriodic, &Property::NonZero], 1.7);
        let f: TimeFn = Arc::new(move |t, o| Some(tp.eval(t, o)));
        assert!(delay_periodic(&f, 1.7, 0.0));
        assert!((0..100).all(|i| f(i as f64 * 0.05, 0).unwrap().abs() > 0.4));
    }

    #[test]
    fn sampled_detects_nonzero_with_fields() {
        assert!(!is_zero(&p("omega_x(t,x)"), &[]).zero);
        assert!(is_zero(&p("omega_tx(t,x) - omega_xt(t,x)"), &[]).zero);
    }
}
