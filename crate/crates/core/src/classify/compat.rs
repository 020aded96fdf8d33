//! Compatibility of a candidate omega with the coefficients.

use super::ClassifyError;
use crate::funcs::{closed_fn, CubicSpline, TimeFn};
use crate::nde::NdeSpec;
use crate::symexpr::{diff, normalize, substitute, Bindings, Expr, JetVar, Rational};
use num_traits::FromPrimitive;
use serde::Serialize;
use std::sync::Arc;

/// omega as an expression or as numeric data.
#[derive(Clone)]
pub enum OmegaRef {
    Closed(Expr),
    Numeric(TimeFn),
}

impl OmegaRef {
    pub fn to_fn(&self, spec: &NdeSpec) -> Result<TimeFn, ClassifyError> {
        match self {
            OmegaRef::Closed(e) => Ok(closed_fn(e, &spec.params(), &spec.bank())?),
            OmegaRef::Numeric(f) => Ok(f.clone()),
        }
    }
}

/// Largest relative residual of each canonical determining equation.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct DeterminingCheck {
    /// w''' + 4 c w' + 2 c' w
    pub c: f64,
    /// k w''' + 2 d' w + 4 d w' + b w''
    pub d: f64,
    /// (b w)'
    pub b: f64,
    /// w k'
    pub k: f64,
    /// w(t) - w(t-r)
    pub delay: f64,
    pub samples: usize,
}

impl DeterminingCheck {
    pub fn max(&self) -> f64 {
        [self.c, self.d, self.b, self.k, self.delay].into_iter().fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.samples > 0 && self.max() < tol
    }

    /// Names of the failing equations.
    pub fn failures(&self, tol: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (name, v) in [("w''' + 4 c w' + 2 c' w = 0", self.c), ("k w''' + 2 d' w + 4 d w' + b w'' = 0", self.d),
            ("b w = const", self.b), ("w k' = 0", self.k), ("w(t) = w(t-r)", self.delay)]
        {
            if !(v < tol) {
                out.push(name);
            }
        }
        out
    }
}

fn rel(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if sum.is_finite() {
        sum.abs() / scale
    } else {
        f64::INFINITY
    }
}

/// Evaluates the canonical determining equations for omega at `samples`.
pub fn determining_check(spec: &NdeSpec, omega: &TimeFn, samples: &[f64]) -> DeterminingCheck {
    let r = spec.r.value;
    let mut out = DeterminingCheck::default();
    let fns: Vec<Option<TimeFn>> = ["b", "c", "d", "k"].iter().map(|s| spec.coeff_fn(s)).collect();
    let co = |slot: &str, t: f64, n: u8| {
        let i = ["b", "c", "d", "k"].iter().position(|s| *s == slot)?;
        fns[i].as_ref()?(t, n)
    };
    for &t in samples {
        let vals = (|| {
            let w: Vec<f64> = (0..4).map(|n| omega(t, n)).collect::<Option<_>>()?;
            let wr = omega(t - r, 0)?;
            let (b, b1) = (co("b", t, 0)?, co("b", t, 1)?);
            let (c, c1) = (co("c", t, 0)?, co("c", t, 1)?);
            let (d, d1) = (co("d", t, 0)?, co("d", t, 1)?);
            let (k, k1) = (co("k", t, 0)?, co("k", t, 1)?);
            Some([
                rel(&[w[3], 4.0 * c * w[1], 2.0 * c1 * w[0]]),
                rel(&[k * w[3], 2.0 * d1 * w[0], 4.0 * d * w[1], b * w[2]]),
                rel(&[b1 * w[0], b * w[1]]),
                rel(&[w[0] * k1]),
                rel(&[w[0], -wr]),
            ])
        })();
        match vals {
            Some(v) => {
                out.c = out.c.max(v[0]);
                out.d = out.d.max(v[1]);
                out.b = out.b.max(v[2]);
                out.k = out.k.max(v[3]);
                out.delay = out.delay.max(v[4]);
                out.samples += 1;
            }
            None => {
                out.c = f64::INFINITY;
            }
        }
    }
    out
}

/// A required coefficient relation with its fitted integration constant.
#[derive(Debug, Clone, Serialize)]
pub struct Compatibility {
    pub condition: String,
    /// Fitted value of the free constant, when the relation has one.
    pub constant: Option<f64>,
    /// Relative spread of the fitted constant (or residual of the relation).
    pub spread: f64,
    pub holds: bool,
}

impl Compatibility {
    /// Fits a quantity that must be constant along the samples.
    pub fn constant_quantity(condition: &str, values: &[f64], tol: f64) -> Self {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Compatibility { condition: condition.to_string(), constant: None, spread: f64::INFINITY, holds: false };
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean.abs().max(1.0);
        Compatibility { condition: condition.to_string(), constant: Some(mean), spread, holds: spread < tol }
    }

    /// A relation that must vanish along the samples.
    pub fn vanishing(condition: &str, values: &[f64], tol: f64) -> Self {
        let spread = if values.iter().all(|v| v.is_finite()) {
            values.iter().map(|v| v.abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        Compatibility { condition: condition.to_string(), constant: None, spread, holds: !values.is_empty() && spread < tol }
    }
}

/// The coefficient c(t) forced by omega.
#[derive(Clone)]
pub enum CForm {
    /// omega = 0 leaves c unconstrained.
    Free,
    Closed(Expr),
    Numeric(TimeFn),
}

impl CForm {
    pub fn describe(&self) -> String {
        match self {
            CForm::Free => "free".into(),
            CForm::Closed(e) => e.to_string(),
            CForm::Numeric(_) => "numeric".into(),
        }
    }
}

fn rational(v: f64) -> Result<Rational, ClassifyError> {
    Rational::from_f64(v).ok_or_else(|| ClassifyError::Other(format!("{} is not finite", v)))
}

/// Solves w''' + 4 c w' + 2 c' w = 0 for c, given c(t0) = `c_t0`.
///
/// Closed omega gives c = (K - w w'' + w'^2/2) / (2 w^2) with K fixed at t0.
/// Numeric omega integrates (w^2 c)' = -w w'''/2 by Simpson's rule on
/// `grid`, a uniform grid that contains t0.
pub fn compatibility_c(spec: &NdeSpec, omega: &OmegaRef, c_t0: f64, grid: &[f64]) -> Result<CForm, ClassifyError> {
    let t0 = spec.t0;
    match omega {
        OmegaRef::Closed(w) => {
            let w = normalize(w);
            if w.is_zero_literal() {
                return Ok(CForm::Free);
            }
            let w1 = diff(&w, JetVar::T)?;
            let w2 = diff(&w1, JetVar::T)?;
            let first = w.clone() * w2 - Expr::rat(1, 2) * w1.pow(2);
            let at_t0 = Bindings::new().with(Expr::t(), Expr::Num(rational(t0)?));
            let k = substitute(&(first.clone() + Expr::int(2) * Expr::Num(rational(c_t0)?) * w.clone().pow(2)), &at_t0);
            let f = closed_fn(&w, &spec.params(), &spec.bank())?;
            if grid.iter().any(|&t| f(t, 0).map_or(true, |v| v.abs() < 1e-12)) {
                return Err(ClassifyError::OmegaVanishes);
            }
            Ok(CForm::Closed(normalize(&((k - first) / (Expr::int(2) * w.pow(2))))))
        }
        OmegaRef::Numeric(f) => {
            let w0 = f(t0, 0).ok_or(ClassifyError::OmegaVanishes)?;
            let all_zero = grid.iter().all(|&t| f(t, 0).map_or(false, |v| v.abs() < 1e-14));
            if all_zero {
                return Ok(CForm::Free);
            }
            if grid.len() < 3 || w0.abs() < 1e-12 {
                return Err(ClassifyError::OmegaVanishes);
            }
            let h = grid[1] - grid[0];
            let i0 = grid.iter().position(|&t| (t - t0).abs() < 1e-9 * h.max(1.0)).ok_or_else(|| {
                ClassifyError::Other("quadrature grid must contain t0".into())
            })?;
            let g = |t: f64| -> Option<f64> { Some(-0.5 * f(t, 0)? * f(t, 3)?) };
            let simpson = |a: f64, b: f64| -> Option<f64> { Some((b - a) / 6.0 * (g(a)? + 4.0 * g(0.5 * (a + b))? + g(b)?)) };
            let mut vals = vec![0.0; grid.len()];
            vals[i0] = w0 * w0 * c_t0;
            for i in i0 + 1..grid.len() {
                vals[i] = vals[i - 1] + simpson(grid[i - 1], grid[i]).ok_or(ClassifyError::OmegaVanishes)?;
            }
            for i in (0..i0).rev() {
                vals[i] = vals[i + 1] - simpson(grid[i], grid[i + 1]).ok_or(ClassifyError::OmegaVanishes)?;
            }
            let mut samples = Vec::with_capacity(grid.len());
            for (&t, v) in grid.iter().zip(&vals) {
                let w = f(t, 0).ok_or(ClassifyError::OmegaVanishes)?;
                if w.abs() < 1e-12 {
                    return Err(ClassifyError::OmegaVanishes);
                }
                samples.push((t, v / (w * w)));
            }
            let spline = Arc::new(CubicSpline::natural(&samples).map_err(ClassifyError::Other)?);
            let wf = f.clone();
            Ok(CForm::Numeric(Arc::new(move |t, order| match order {
                1 => {
                    // from 2 w c' + 4 w' c + w''' = 0
                    let c = spline.eval(t, 0);
                    Some(-(wf(t, 3)? + 4.0 * wf(t, 1)? * c) / (2.0 * wf(t, 0)?))
                }
                n => Some(spline.eval(t, n)),
            })))
        }
    }
}

/// Samples of `f` on `grid`.
pub fn tabulate(f: &TimeFn, grid: &[f64], order: u8) -> Vec<f64> {
    grid.iter().map(|&t| f(t, order).unwrap_or(f64::NAN)).collect()
}

