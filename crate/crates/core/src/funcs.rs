//! Numeric function banks used to evaluate coefficient and unknown-function atoms.

use crate::scalar::Real;
use crate::symexpr::{diff, eval_numeric, Env, Expr, ExprError, FnTable, JetVar, MAX_COEFF_ORDER};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// `f^(order)(t)`.
pub type TimeFn = Arc<dyn Fn(f64, u8) -> Option<f64> + Send + Sync>;
/// `d^dt d^dx f(t, x)`.
pub type PlaneFn = Arc<dyn Fn(f64, f64, u8, u8) -> Option<f64> + Send + Sync>;

/// Named numeric functions of t and of (t, x).
#[derive(Clone, Default)]
pub struct FnBank {
    time: BTreeMap<String, TimeFn>,
    plane: BTreeMap<String, PlaneFn>,
}

impl fmt::Debug for FnBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnBank")
            .field("time", &self.time.keys().collect::<Vec<_>>())
            .field("plane", &self.plane.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl FnBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, f: TimeFn) {
        self.time.insert(name.to_string(), f);
    }

    pub fn with(mut self, name: &str, f: TimeFn) -> Self {
        self.insert(name, f);
        self
    }

    pub fn insert_plane(&mut self, name: &str, f: PlaneFn) {
        self.plane.insert(name.to_string(), f);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.time.contains_key(name) || self.plane.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&TimeFn> {
        self.time.get(name)
    }

    /// Entries of `other` win.
    pub fn overlay(&self, other: &FnBank) -> FnBank {
        let mut out = self.clone();
        out.time.extend(other.time.iter().map(|(k, v)| (k.clone(), v.clone())));
        out.plane.extend(other.plane.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }
}

impl<S: Real> FnTable<S> for FnBank {
    fn coeff(&self, name: &str, t: S, order: u8) -> Option<S> {
        let v = self.time.get(name).and_then(|f| f(t.as_f64(), order))?;
        S::from_f64(v)
    }

    fn field(&self, name: &str, t: S, x: S, dt: u8, dx: u8) -> Option<S> {
        let v = self.plane.get(name).and_then(|f| f(t.as_f64(), x.as_f64(), dt, dx))?;
        S::from_f64(v)
    }
}

/// A closed-form function of t; derivatives are taken symbolically once.
pub fn closed_fn(e: &Expr, params: &BTreeMap<String, f64>, inner: &FnBank) -> Result<TimeFn, ExprError> {
    let mut ders = vec![e.clone()];
    for k in 0..MAX_COEFF_ORDER as usize {
        let next = diff(&ders[k], JetVar::T)?;
        ders.push(next);
    }
    let params = params.clone();
    let inner = inner.clone();
    Ok(Arc::new(move |t, order| {
        let e = ders.get(order as usize)?;
        let mut env = Env::<f64>::new().set(JetVar::T, t);
        env.params = params.clone();
        eval_numeric(e, &env, &inner).ok()
    }))
}

/// Constant function.
pub fn constant_fn(v: f64) -> TimeFn {
    Arc::new(move |_, order| Some(if order == 0 { v } else { 0.0 }))
}

/// Quintic Hermite interpolation on one cell of width `h` from value, first
/// and second derivative at both ends; `s` in [0, 1].
pub fn quintic_hermite(left: [f64; 3], right: [f64; 3], h: f64, s: f64, order: u8) -> f64 {
    let [y0, d0, e0] = left;
    let [y1, d1, e1] = right;
    let (hd0, hd1, he0, he1) = (h * d0, h * d1, h * h * e0, h * h * e1);
    let c = [
        y0,
        hd0,
        0.5 * he0,
        -10.0 * y0 - 6.0 * hd0 - 1.5 * he0 + 10.0 * y1 - 4.0 * hd1 + 0.5 * he1,
        15.0 * y0 + 8.0 * hd0 + 1.5 * he0 - 15.0 * y1 + 7.0 * hd1 - he1,
        -6.0 * y0 - 3.0 * hd0 - 0.5 * he0 + 6.0 * y1 - 3.0 * hd1 + 0.5 * he1,
    ];
    let k = order as usize;
    if k > 5 {
        return 0.0;
    }
    let mut acc = 0.0;
    for j in (k..6).rev() {
        let falling: f64 = (0..k).map(|i| (j - i) as f64).product();
        acc = acc * s + c[j] * falling;
    }
    acc / h.powi(k as i32)
}

/// Natural cubic spline through tabulated samples.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    ts: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(samples: &[(f64, f64)]) -> Result<Self, String> {
        if samples.len() < 3 {
            return Err("need at least three samples".into());
        }
        let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        if ts.windows(2).any(|w| w[1] <= w[0]) || ts.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err("sample times must be finite and strictly increasing".into());
        }
        let n = ts.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        a[(0, 0)] = 1.0;
        a[(n - 1, n - 1)] = 1.0;
        for i in 1..n - 1 {
            let h0 = ts[i] - ts[i - 1];
            let h1 = ts[i + 1] - ts[i];
            a[(i, i - 1)] = h0;
            a[(i, i)] = 2.0 * (h0 + h1);
            a[(i, i + 1)] = h1;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        let m = a.lu().solve(&rhs).ok_or("singular spline system")?;
        Ok(CubicSpline { ts, ys, m: m.iter().copied().collect() })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    pub fn eval(&self, t: f64, order: u8) -> f64 {
        let n = self.ts.len();
        let i = match self.ts.partition_point(|&s| s <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let a = t1 - t;
        let b = t - t0;
        match order {
            0 => m0 * a.powi(3) / (6.0 * h) + m1 * b.powi(3) / (6.0 * h) + (y0 / h - m0 * h / 6.0) * a + (y1 / h - m1 * h / 6.0) * b,
            1 => -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - (y0 / h - m0 * h / 6.0) + (y1 / h - m1 * h / 6.0),
            2 => m0 * a / h + m1 * b / h,
            3 => (m1 - m0) / h,
            _ => 0.0,
        }
    }

    pub fn into_fn(self) -> TimeFn {
        Arc::new(move |t, order| Some(self.eval(t, order)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    #[test]
    fn closed_functions_carry_derivatives() {
        let f = closed_fn(&parse("sin(t)").unwrap(), &BTreeMap::new(), &FnBank::new()).unwrap();
        assert!((f(0.3, 1).unwrap() - 0.3f64.cos()).abs() < 1e-15);
        assert!((f(0.3, 3).unwrap() + 0.3f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn quintic_is_exact_on_quintics() {
        let f = |t: f64| [t.powi(5) - 2.0 * t * t, 5.0 * t.powi(4) - 4.0 * t, 20.0 * t.powi(3) - 4.0, 60.0 * t * t];
        let (a, b) = (0.3, 0.8);
        let (fa, fb) = (f(a), f(b));
        for s in [0.0, 0.25, 0.6, 1.0] {
            let t = a + s * (b - a);
            for k in 0..4u8 {
                let got = quintic_hermite([fa[0], fa[1], fa[2]], [fb[0], fb[1], fb[2]], b - a, s, k);
                assert!((got - f(t)[k as usize]).abs() < 1e-9, "order {} at {}", k, t);
            }
        }
    }

    #[test]
    fn spline_reproduces_cubics_inside() {
        let samples: Vec<(f64, f64)> = (0..41).map(|i| {
            let t = i as f64 * 0.1;
            (t, t.sin())
        }).collect();
        let s = CubicSpline::natural(&samples).unwrap();
        assert!((s.eval(2.05, 0) - 2.05f64.sin()).abs() < 1e-5);
        assert!((s.eval(2.05, 1) - 2.05f64.cos()).abs() < 1e-3);
        assert!(CubicSpline::natural(&[(0.0, 1.0), (0.0, 2.0), (1.0, 0.0)]).is_err());
    }
}
