//! Numeric solutions of the third-order equations for omega(t).

use crate::funcs::{quintic_hermite, TimeFn};
use nalgebra::{DMatrix, Matrix3};
use std::fmt;
use std::sync::Arc;

/// Which omega equation to integrate. All are integrated in third-order form;
/// the `*Integral` variants also report their first integral along the grid.
#[derive(Clone)]
pub enum OmegaOde {
    /// c2 w w''' + c3 w'' = 0.
    Autonomous { c2: f64, c3: f64 },
    /// w w''' + w'' = 0.
    AutonomousUnit,
    /// c2 w''' + 4 d w' + 2 d' w = 0.
    DelayCoefficient { c2: f64, d: TimeFn },
    /// Same equation; conserves c2 (w w'' - w'^2/2) + 2 d w^2.
    DelayIntegral { c2: f64, d: TimeFn },
    /// w''' + 4 c w' + 2 c' w = 0; conserves w w'' - w'^2/2 + 2 c w^2.
    CIntegral { c: TimeFn },
}

impl fmt::Debug for OmegaOde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl OmegaOde {
    pub fn name(&self) -> &'static str {
        match self {
            OmegaOde::Autonomous { .. } => "autonomous",
            OmegaOde::AutonomousUnit => "autonomous-unit",
            OmegaOde::DelayCoefficient { .. } => "delay-coefficient",
            OmegaOde::DelayIntegral { .. } => "delay-integral",
            OmegaOde::CIntegral { .. } => "c-integral",
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, OmegaOde::Autonomous { .. } | OmegaOde::AutonomousUnit)
    }

    /// w''' from (t, w, w', w''); `None` where the equation divides by w = 0
    /// or a coefficient is not evaluable.
    pub fn third(&self, t: f64, y: [f64; 3]) -> Option<f64> {
        let [w, w1, w2] = y;
        let out = match self {
            OmegaOde::Autonomous { c2, c3 } => {
                if w.abs() < 1e-10 {
                    return None;
                }
                -c3 * w2 / (c2 * w)
            }
            OmegaOde::AutonomousUnit => {
                if w.abs() < 1e-10 {
                    return None;
                }
                -w2 / w
            }
            OmegaOde::DelayCoefficient { c2, d } | OmegaOde::DelayIntegral { c2, d } => {
                -(4.0 * d(t, 0)? * w1 + 2.0 * d(t, 1)? * w) / c2
            }
            OmegaOde::CIntegral { c } => -(4.0 * c(t, 0)? * w1 + 2.0 * c(t, 1)? * w),
        };
        out.is_finite().then_some(out)
    }

    /// The conserved quantity, for the integral forms.
    pub fn first_integral(&self, t: f64, y: [f64; 3]) -> Option<f64> {
        let [w, w1, w2] = y;
        match self {
            OmegaOde::DelayIntegral { c2, d } => Some(c2 * (w * w2 - 0.5 * w1 * w1) + 2.0 * d(t, 0)? * w * w),
            OmegaOde::CIntegral { c } => Some(w * w2 - 0.5 * w1 * w1 + 2.0 * c(t, 0)? * w * w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum OmegaError {
    #[error("omega(t0) = 0 but the equation divides by omega")]
    SingularStart,
    #[error("step must be positive and the span must contain t0")]
    Grid,
}

/// Uniform grid with t0 as a node.
#[derive(Debug, Clone, Copy)]
pub struct OmegaGrid {
    pub t0: f64,
    pub lo: f64,
    pub hi: f64,
    pub h: f64,
}

/// RK4 solution with quintic Hermite dense output.
#[derive(Debug, Clone)]
pub struct OmegaSolution {
    pub ode: OmegaOde,
    pub h: f64,
    pub ts: Vec<f64>,
    pub ys: Vec<[f64; 3]>,
    /// Set when the solution stopped early at this time.
    pub truncated: Option<f64>,
    pub warnings: Vec<String>,
}

fn rk4(ode: &OmegaOde, t: f64, y: [f64; 3], h: f64) -> Option<[f64; 3]> {
    let f = |t: f64, y: [f64; 3]| -> Option<[f64; 3]> { Some([y[1], y[2], ode.third(t, y)?]) };
    let add = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    let k1 = f(t, y)?;
    let k2 = f(t + h / 2.0, add(y, k1, h / 2.0))?;
    let k3 = f(t + h / 2.0, add(y, k2, h / 2.0))?;
    let k4 = f(t + h, add(y, k3, h))?;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

const SUBSTEPS: usize = 8;

/// Integrates forward and backward from t0 with initial (w, w', w'').
pub fn omega_ode_solve(ode: OmegaOde, init: [f64; 3], grid: OmegaGrid) -> Result<OmegaSolution, OmegaError> {
    let OmegaGrid { t0, lo, hi, h } = grid;
    if !(h > 0.0) || lo > t0 || hi < t0 {
        return Err(OmegaError::Grid);
    }
    if ode.third(t0, init).is_none() {
        return Err(OmegaError::SingularStart);
    }
    let n_fwd = ((hi - t0) / h).ceil() as usize;
    let n_back = ((t0 - lo) / h).ceil() as usize;
    let mut warnings = Vec::new();
    let mut truncated = None;
    let mut march = |dir: f64, n: usize| -> Vec<(f64, [f64; 3])> {
        let mut out = Vec::with_capacity(n);
        let mut y = init;
        for i in 0..n {
            let t = t0 + dir * i as f64 * h;
            let sub = (0..SUBSTEPS).try_fold(y, |y, j| rk4(&ode, t + dir * j as f64 * h / SUBSTEPS as f64, y, dir * h / SUBSTEPS as f64));
            match sub {
                Some(next) if ode.third(t + dir * h, next).is_some() => {
                    y = next;
                    out.push((t0 + dir * (i + 1) as f64 * h, y));
                }
                _ => {
                    warnings.push(format!("omega reaches a singular point near t = {:.6}; solution truncated", t));
                    truncated = Some(t);
                    break;
                }
            }
        }
        out
    };
    let back = march(-1.0, n_back);
    let fwd = march(1.0, n_fwd);
    let mut ts = Vec::with_capacity(back.len() + fwd.len() + 1);
    let mut ys = Vec::with_capacity(ts.capacity());
    for (t, y) in back.into_iter().rev() {
        ts.push(t);
        ys.push(y);
    }
    ts.push(t0);
    ys.push(init);
    for (t, y) in fwd {
        ts.push(t);
        ys.push(y);
    }
    Ok(OmegaSolution { ode, h, ts, ys, truncated, warnings })
}

impl OmegaSolution {
    pub fn span(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    /// w^(order)(t) for order <= 3.
    pub fn eval(&self, t: f64, order: u8) -> Option<f64> {
        let (lo, hi) = self.span();
        let tol = 1e-9 * self.h;
        if !(t >= lo - tol && t <= hi + tol) || self.ts.len() < 2 {
            return None;
        }
        let i = (((t - lo) / self.h).floor() as usize).min(self.ts.len() - 2);
        let s = ((t - self.ts[i]) / self.h).clamp(0.0, 1.0);
        let (l, r) = (self.ys[i], self.ys[i + 1]);
        match order {
            0..=2 => Some(quintic_hermite(l, r, self.h, s, order)),
            3 => {
                let y = [0, 1, 2].map(|k| quintic_hermite(l, r, self.h, s, k));
                self.ode.third(t, y)
            }
            _ => None,
        }
    }

    pub fn state(&self, t: f64) -> Option<[f64; 3]> {
        Some([self.eval(t, 0)?, self.eval(t, 1)?, self.eval(t, 2)?])
    }

    /// First integral at every node, when the equation has one.
    pub fn first_integral(&self) -> Option<Vec<f64>> {
        self.ts.iter().zip(&self.ys).map(|(&t, &y)| self.ode.first_integral(t, y)).collect()
    }

    /// max |I - I(t0)| / max(1, |I(t0)|) over the grid.
    pub fn conservation_error(&self, t0: f64) -> Option<f64> {
        let ints = self.first_integral()?;
        let i0 = self.ode.first_integral(t0, self.state(t0)?)?;
        let scale = i0.abs().max(1.0);
        Some(ints.iter().map(|v| (v - i0).abs() / scale).fold(0.0, f64::max))
    }

    pub fn into_fn(self: Arc<Self>) -> TimeFn {
        Arc::new(move |t, order| self.eval(t, order))
    }
}

/// Sum of weighted solutions.
pub fn combine(parts: &[Arc<OmegaSolution>], weights: &[f64]) -> TimeFn {
    let parts: Vec<(Arc<OmegaSolution>, f64)> = parts.iter().cloned().zip(weights.iter().copied()).collect();
    Arc::new(move |t, order| {
        let mut acc = 0.0;
        for (p, w) in &parts {
            if *w != 0.0 {
                acc += w * p.eval(t, order)?;
            }
        }
        Some(acc)
    })
}

/// Splitting of the solution space of a linear omega equation into the
/// combinations that return to their initial state after one delay and the
/// rest. Basis solutions start from the unit vectors.
#[derive(Debug, Clone)]
pub struct PeriodicSplit {
    pub periodic: Vec<[f64; 3]>,
    pub other: Vec<[f64; 3]>,
    pub singular_values: Vec<f64>,
}

pub fn periodic_split(basis: &[Arc<OmegaSolution>; 3], t0: f64, r: f64) -> Option<PeriodicSplit> {
    let mut m = Matrix3::<f64>::zeros();
    for (j, b) in basis.iter().enumerate() {
        let y = b.state(t0 + r)?;
        for i in 0..3 {
            m[(i, j)] = y[i];
        }
    }
    let a = DMatrix::from_iterator(3, 3, (m - Matrix3::identity()).iter().copied());
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let scale = sv.iter().copied().fold(1.0, f64::max);
    let mut periodic = Vec::new();
    let mut other = Vec::new();
    for (k, s) in sv.iter().enumerate() {
        let v = [v_t[(k, 0)], v_t[(k, 1)], v_t[(k, 2)]];
        if *s < 1e-7 * scale {
            periodic.push(v);
        } else {
            other.push(v);
        }
    }
    Some(PeriodicSplit { periodic, other, singular_values: sv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::constant_fn;

    fn grid() -> OmegaGrid {
        OmegaGrid { t0: 0.0, lo: -2.0, hi: 6.0, h: 1.0 / 128.0 }
    }

    #[test]
    fn unit_equation_keeps_lines() {
        let sol = omega_ode_solve(OmegaOde::AutonomousUnit, [2.0, 0.5, 0.0], grid()).unwrap();
        for (t, y) in sol.ts.iter().zip(&sol.ys) {
            assert!((y[0] - (2.0 + 0.5 * t)).abs() < 1e-10);
        }
        assert!((sol.eval(1.2345, 0).unwrap() - (2.0 + 0.5 * 1.2345)).abs() < 1e-10);
    }

    #[test]
    fn c_integral_constant_solution() {
        let sol = omega_ode_solve(OmegaOde::CIntegral { c: constant_fn(0.0) }, [1.0, 0.0, 0.0], grid()).unwrap();
        assert!(sol.ys.iter().all(|y| (y[0] - 1.0).abs() < 1e-14));
    }

    #[test]
    fn first_integral_is_conserved() {
        let ode = OmegaOde::DelayIntegral { c2: 1.0, d: constant_fn(1.0) };
        let sol = omega_ode_solve(ode, [1.0, 0.3, -0.2], grid()).unwrap();
        assert!(sol.conservation_error(0.0).unwrap() < 1e-8);
        // w = sin(2t) solves w''' + 4 w' = 0
        let ode = OmegaOde::DelayCoefficient { c2: 1.0, d: constant_fn(1.0) };
        let sol = omega_ode_solve(ode, [0.0, 2.0, 0.0], grid()).unwrap();
        for t in [-1.3, 0.7, 4.4] {
            assert!((sol.eval(t, 0).unwrap() - (2.0 * t).sin()).abs() < 1e-9);
            assert!((sol.eval(t, 3).unwrap() + 8.0 * (2.0 * t).cos()).abs() < 1e-7);
        }
    }

    #[test]
    fn division_by_zero_truncates() {
        let sol = omega_ode_solve(OmegaOde::Autonomous { c2: 1.0, c3: 1.0 }, [1.0, -1.0, 0.0], grid()).unwrap();
        assert!(sol.truncated.is_some());
        assert!(!sol.warnings.is_empty());
        assert_eq!(
            omega_ode_solve(OmegaOde::AutonomousUnit, [0.0, 1.0, 0.0], grid()).unwrap_err(),
            OmegaError::SingularStart
        );
    }

    #[test]
    fn constant_coefficients_are_fully_periodic_at_resonance() {
        let d = constant_fn(1.0);
        let basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].map(|init| {
            Arc::new(omega_ode_solve(OmegaOde::DelayIntegral { c2: 1.0, d: d.clone() }, init, grid()).unwrap())
        });
        let split = periodic_split(&basis, 0.0, std::f64::consts::PI).unwrap();
        assert_eq!(split.periodic.len(), 3);
        let split = periodic_split(&basis, 0.0, 1.0).unwrap();
        assert_eq!(split.periodic.len(), 1);
        // only the constant solution survives
        let v = split.periodic[0];
        assert!(v[0].abs() > 0.99 && v[1].abs() < 1e-6 && v[2].abs() < 1e-6);
    }
}
