//! Method-of-steps RK4 for x'' = F(t, x, x(t-r), x', x'(t-r), x''(t-r)).

use crate::funcs::{FnBank, TimeFn};
use crate::nde::NdeSpec;
use crate::scalar::Real;
use crate::symexpr::{diff, eval_numeric, parse, Env, Expr, ExprError, FnTable, JetVar};
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("T - t0 must be a whole number of delays, got {0} delays")]
    NotWholeIntervals(f64),
    #[error("need at least 16 steps per delay, got {0}")]
    TooFewSteps(usize),
    #[error("initial function: {0}")]
    Theta(ExprError),
    #[error("right-hand side evaluation failed at t = {t}: {err}")]
    Eval { t: f64, err: ExprError },
    #[error("t = {0} outside the trajectory span")]
    OutsideSpan(f64),
}

/// Closed-form initial function on [t0 - r, t0] with two derivatives.
#[derive(Debug, Clone)]
pub struct InitialFunction {
    pub theta: Expr,
    ders: [Expr; 3],
}

impl InitialFunction {
    pub fn new(theta: Expr) -> Result<Self, SolveError> {
        for v in JetVar::ALL.iter().skip(1) {
            if theta.contains_var(*v) {
                return Err(SolveError::Theta(ExprError::Invalid("initial function must depend on t only".into())));
            }
        }
        let d1 = diff(&theta, JetVar::T).map_err(SolveError::Theta)?;
        let d2 = diff(&d1, JetVar::T).map_err(SolveError::Theta)?;
        Ok(InitialFunction { ders: [crate::symexpr::normalize(&theta), d1, d2], theta })
    }

    pub fn parse(text: &str) -> Result<Self, SolveError> {
        Self::new(parse(text).map_err(SolveError::Theta)?)
    }

    pub fn eval<S: Real>(&self, t: S, order: usize, params: &Env<S>, table: &dyn FnTable<S>) -> Result<S, ExprError> {
        let mut env = params.clone();
        env.put(JetVar::T, t);
        eval_numeric(&self.ders[order], &env, table)
    }
}

/// Dense solution on [t0 - r, T].
#[derive(Clone)]
pub struct Trajectory<S: Real> {
    pub t0: S,
    pub r: S,
    pub h: S,
    pub steps_per_delay: usize,
    pub x: Vec<S>,
    pub xp: Vec<S>,
    /// x'' at the left end of each interval (right limit).
    pub xpp_left: Vec<S>,
    /// x'' at the right end of each interval (left limit).
    pub xpp_right: Vec<S>,
    pub theta: InitialFunction,
    pub tag: Option<String>,
    params: Env<S>,
    bank: FnBank,
}

impl<S: Real> std::fmt::Debug for Trajectory<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("t0", &self.t0)
            .field("r", &self.r)
            .field("steps", &self.intervals())
            .field("theta", &self.theta.theta.to_string())
            .finish()
    }
}

fn hermite<S: Real>(s: S, h: S, y0: S, d0: S, y1: S, d1: S, order: usize) -> S {
    let one = S::one();
    let two = S::lit(2.0);
    let three = S::lit(3.0);
    let six = S::lit(6.0);
    match order {
        0 => {
            let s2 = s * s;
            let s3 = s2 * s;
            (two * s3 - three * s2 + one) * y0
                + (s3 - two * s2 + s) * h * d0
                + (three * s2 - two * s3) * y1
                + (s3 - s2) * h * d1
        }
        _ => {
            let s2 = s * s;
            ((six * s2 - six * s) * y0 + (three * s2 - S::lit(4.0) * s + one) * h * d0 + (six * s - six * s2) * y1
                + (three * s2 - two * s) * h * d1)
                / h
        }
    }
}

impl<S: Real> Trajectory<S> {
    pub fn intervals(&self) -> usize {
        self.x.len() - 1
    }

    pub fn end(&self) -> S {
        self.node(self.intervals())
    }

    pub fn node(&self, i: usize) -> S {
        self.t0 + self.h * S::lit(i as f64)
    }

    pub fn grid(&self) -> Vec<S> {
        (0..self.x.len()).map(|i| self.node(i)).collect()
    }

    pub fn span(&self) -> (S, S) {
        (self.t0 - self.r, self.end())
    }

    /// Value of x^(order) in interval `j` at local coordinate s in [0, 1].
    fn local(&self, j: usize, s: S, order: usize) -> S {
        let h = self.h;
        match order {
            0 => hermite(s, h, self.x[j], self.xp[j], self.x[j + 1], self.xp[j + 1], 0),
            1 => hermite(s, h, self.x[j], self.xp[j], self.x[j + 1], self.xp[j + 1], 1),
            _ => hermite(s, h, self.xp[j], self.xpp_left[j], self.xp[j + 1], self.xpp_right[j], 1),
        }
    }

    /// x^(order)(t) for order 0..=2; the history is exact.
    pub fn eval(&self, t: S, order: usize) -> Result<S, SolveError> {
        let (lo, hi) = self.span();
        let slack = self.h * S::lit(1e-9);
        if t < lo - slack || t > hi + slack || order > 2 {
            return Err(SolveError::OutsideSpan(t.as_f64()));
        }
        if t <= self.t0 {
            return self
                .theta
                .eval(t, order, &self.params, &self.bank)
                .map_err(|err| SolveError::Eval { t: t.as_f64(), err });
        }
        let u = (t - self.t0) / self.h;
        let j = u.floor().to_usize().unwrap_or(0).min(self.intervals() - 1);
        let s = u - S::lit(j as f64);
        Ok(self.local(j, s, order))
    }

    pub fn x_at(&self, t: S) -> Result<S, SolveError> {
        self.eval(t, 0)
    }

    /// All seven jet coordinates at t, read from the dense output.
    pub fn jets(&self, t: S) -> Result<Env<S>, SolveError> {
        let tr = t - self.r;
        let mut env = self.params.clone();
        env.put(JetVar::T, t);
        env.put(JetVar::X, self.eval(t, 0)?);
        env.put(JetVar::X1, self.eval(t, 1)?);
        env.put(JetVar::X2, self.eval(t, 2)?);
        env.put(JetVar::XR, self.eval(tr, 0)?);
        env.put(JetVar::X1R, self.eval(tr, 1)?);
        env.put(JetVar::X2R, self.eval(tr, 2)?);
        Ok(env)
    }

    pub fn params(&self) -> &Env<S> {
        &self.params
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,xprime,xsecond\n");
        for i in 0..self.x.len() {
            let xpp = if i < self.intervals() { self.xpp_left[i] } else { self.xpp_right[i - 1] };
            let _ = writeln!(out, "{},{},{},{}", self.node(i), self.x[i], self.xp[i], xpp);
        }
        out
    }

    /// Largest |x - f| over the nodes in [t0, T].
    pub fn max_error(&self, f: impl Fn(S) -> S) -> S {
        (0..self.x.len()).fold(S::zero(), |m, i| m.max((self.x[i] - f(self.node(i))).abs()))
    }
}

impl Trajectory<f64> {
    /// x, x', x'' as a function of t for binding into a [`FnBank`].
    pub fn into_fn(self: Arc<Self>) -> TimeFn {
        Arc::new(move |t, order| if order <= 2 { self.eval(t, order as usize).ok() } else { None })
    }
}

/// Delayed quantities at time t: (x, x', x'') at t - r.
fn delayed<S: Real>(
    tr: &Trajectory<S>,
    i: usize,
    s: S,
    t: S,
) -> Result<(S, S, S), SolveError> {
    let n = tr.steps_per_delay;
    let td = t - tr.r;
    if i < n {
        let g = |o| tr.theta.eval(td, o, &tr.params, &tr.bank).map_err(|err| SolveError::Eval { t: td.as_f64(), err });
        Ok((g(0)?, g(1)?, g(2)?))
    } else {
        let j = i - n;
        Ok((tr.local(j, s, 0), tr.local(j, s, 1), tr.local(j, s, 2)))
    }
}

/// Integrates `spec` from `theta` up to `t_end` with `steps` RK4 steps per delay.
pub fn integrate<S: Real>(spec: &NdeSpec, theta: &InitialFunction, t_end: S, steps: usize) -> Result<Trajectory<S>, SolveError> {
    integrate_with(spec, theta, t_end, steps, &FnBank::new())
}

/// As [`integrate`], with extra functions available to the right-hand side.
pub fn integrate_with<S: Real>(
    spec: &NdeSpec,
    theta: &InitialFunction,
    t_end: S,
    steps: usize,
    extra: &FnBank,
) -> Result<Trajectory<S>, SolveError> {
    if steps < 16 {
        return Err(SolveError::TooFewSteps(steps));
    }
    let t0 = S::lit(spec.t0);
    let r = S::lit(spec.r.value);
    let delays = ((t_end - t0) / r).as_f64();
    let m = delays.round();
    if m < 1.0 || (delays - m).abs() > 1e-9 {
        return Err(SolveError::NotWholeIntervals(delays));
    }
    let total = m as usize * steps;
    let h = r / S::lit(steps as f64);
    let f = spec.equation().solved().expect("solved form");
    let bank = spec.bank().overlay(extra);
    let mut params = Env::<S>::new();
    for (k, v) in spec.params() {
        params.params.insert(k, S::lit(v));
    }
    let mut tr = Trajectory {
        t0,
        r,
        h,
        steps_per_delay: steps,
        x: Vec::with_capacity(total + 1),
        xp: Vec::with_capacity(total + 1),
        xpp_left: Vec::with_capacity(total),
        xpp_right: Vec::with_capacity(total),
        theta: theta.clone(),
        tag: None,
        params: params.clone(),
        bank: bank.clone(),
    };
    let th = |o| theta.eval(t0, o, &params, &bank).map_err(|err| SolveError::Eval { t: t0.as_f64(), err });
    tr.x.push(th(0)?);
    tr.xp.push(th(1)?);
    let half = S::lit(0.5);
    let rhs = |tr: &Trajectory<S>, i: usize, s: S, t: S, x: S, v: S| -> Result<S, SolveError> {
        let (xd, vd, ad) = delayed(tr, i, s, t)?;
        let mut env = params.clone();
        env.put(JetVar::T, t);
        env.put(JetVar::X, x);
        env.put(JetVar::X1, v);
        env.put(JetVar::XR, xd);
        env.put(JetVar::X1R, vd);
        env.put(JetVar::X2R, ad);
        eval_numeric(&f, &env, &bank).map_err(|err| SolveError::Eval { t: t.as_f64(), err })
    };
    for i in 0..total {
        let t = tr.node(i);
        let (x, v) = (tr.x[i], tr.xp[i]);
        let a1 = rhs(&tr, i, S::zero(), t, x, v)?;
        let (k1x, k1v) = (v, a1);
        let (k2x, k2v) = (v + half * h * k1v, rhs(&tr, i, half, t + half * h, x + half * h * k1x, v + half * h * k1v)?);
        let (k3x, k3v) = (v + half * h * k2v, rhs(&tr, i, half, t + half * h, x + half * h * k2x, v + half * h * k2v)?);
        let (k4x, k4v) = (v + h * k3v, rhs(&tr, i, S::one(), t + h, x + h * k3x, v + h * k3v)?);
        let sixth = h / S::lit(6.0);
        let two = S::lit(2.0);
        let xn = x + sixth * (k1x + two * k2x + two * k3x + k4x);
        let vn = v + sixth * (k1v + two * k2v + two * k3v + k4v);
        let a_end = rhs(&tr, i, S::one(), t + h, xn, vn)?;
        tr.x.push(xn);
        tr.xp.push(vn);
        tr.xpp_left.push(a1);
        tr.xpp_right.push(a_end);
    }
    Ok(tr)
}

/// Max |x'' + a x' + b x'(t-r) + c x + d x(t-r) + k x''(t-r) - h| over `samples`.
pub fn residual<S: Real>(tr: &Trajectory<S>, spec: &NdeSpec, samples: &[S]) -> Result<S, SolveError> {
    let lhs = spec.lhs();
    let (lo, hi) = (tr.t0, tr.end());
    let bank = spec.bank();
    let mut worst = S::zero();
    for &t in samples {
        if t < lo || t > hi {
            return Err(SolveError::OutsideSpan(t.as_f64()));
        }
        let env = tr.jets(t)?;
        let v = eval_numeric(&lhs, &env, &bank).map_err(|err| SolveError::Eval { t: t.as_f64(), err })?;
        worst = worst.max(v.abs());
    }
    Ok(worst)
}

/// Interior sample points: `per_step` points inside each step.
pub fn interior_samples<S: Real>(tr: &Trajectory<S>, per_step: usize) -> Vec<S> {
    let mut out = Vec::new();
    for i in 0..tr.intervals() {
        for k in 1..=per_step {
            out.push(tr.node(i) + tr.h * S::lit(k as f64 / (per_step + 1) as f64));
        }
    }
    out
}

/// A concrete rho(t) for parametric generators.
pub fn solve_homogeneous_slot<S: Real>(spec: &NdeSpec, seed: &InitialFunction, t_end: S, steps: usize) -> Result<Trajectory<S>, SolveError> {
    if !spec.h.is_zero() {
        return Err(SolveError::Theta(ExprError::Invalid("the rho slot needs a homogeneous equation".into())));
    }
    let mut tr = integrate(spec, seed, t_end, steps)?;
    tr.tag = Some("rho".into());
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nde::{CoeffDescriptor, Delay};
    use std::f64::consts::PI;

    fn neutral_pi() -> NdeSpec {
        NdeSpec::new(Delay::pi()).set("k", CoeffDescriptor::int(1))
    }

    #[test]
    fn neutral_pi_reproduces_sine() {
        let tr = integrate::<f64>(&neutral_pi(), &InitialFunction::parse("sin(t)").unwrap(), 3.0 * PI, 64).unwrap();
        assert!(tr.max_error(f64::sin) < 1e-6);
        let samples = interior_samples(&tr, 3);
        assert!(residual(&tr, &neutral_pi(), &samples).unwrap() < 1e-5);
    }

    #[test]
    fn constants_solve_ex2() {
        let spec = NdeSpec::from_json(r#"{"c": -1, "d": 1, "r": 1}"#).unwrap();
        let tr = integrate::<f64>(&spec, &InitialFunction::parse("5").unwrap(), 4.0, 16).unwrap();
        assert!(tr.max_error(|_| 5.0) < 1e-10);
        assert!(residual(&tr, &spec, &interior_samples(&tr, 2)).unwrap() < 1e-12);
    }

    #[test]
    fn ode_convergence_is_fourth_order() {
        let spec = NdeSpec::new(Delay::new(1.0)).set("c", CoeffDescriptor::int(1));
        let err = |n| integrate::<f64>(&spec, &InitialFunction::parse("sin(t)").unwrap(), 6.0, n).unwrap().max_error(f64::sin);
        let ratio = err(32) / err(64);
        assert!((12.0..20.0).contains(&ratio), "{}", ratio);
    }

    #[test]
    fn history_is_exact() {
        let tr = integrate::<f64>(&neutral_pi(), &InitialFunction::parse("sin(t)").unwrap(), PI, 16).unwrap();
        assert_eq!(tr.eval(-1.0, 2).unwrap(), -(-1.0f64).sin());
        assert!(tr.eval(-4.0, 0).is_err());
    }

    #[test]
    fn corrupted_trajectory_is_detected() {
        let mut tr = integrate::<f64>(&neutral_pi(), &InitialFunction::parse("sin(t)").unwrap(), 3.0 * PI, 64).unwrap();
        for v in tr.x.iter_mut().chain(tr.xp.iter_mut()) {
            *v *= 1.01;
        }
        for v in tr.xpp_left.iter_mut().chain(tr.xpp_right.iter_mut()) {
            *v *= 1.01;
        }
        let samples = interior_samples(&tr, 2);
        assert!(residual(&tr, &neutral_pi(), &samples).unwrap() > 1e-3);
    }

    #[test]
    fn argument_errors() {
        let th = InitialFunction::parse("sin(t)").unwrap();
        assert!(matches!(integrate::<f64>(&neutral_pi(), &th, 2.0, 64), Err(SolveError::NotWholeIntervals(_))));
        assert!(matches!(integrate::<f64>(&neutral_pi(), &th, PI, 8), Err(SolveError::TooFewSteps(8))));
        assert!(InitialFunction::parse("x").is_err());
    }

    #[test]
    fn single_precision_runs() {
        let tr = integrate::<f32>(&neutral_pi(), &InitialFunction::parse("sin(t)").unwrap(), 3.0 * std::f32::consts::PI, 32).unwrap();
        assert!(tr.max_error(f32::sin) < 1e-3);
    }

    #[test]
    fn homogeneous_slot() {
        let tr = solve_homogeneous_slot::<f64>(&neutral_pi(), &InitialFunction::parse("0").unwrap(), PI, 16).unwrap();
        assert!(tr.max_error(|_| 0.0) == 0.0);
        assert_eq!(tr.tag.as_deref(), Some("rho"));
    }
}
