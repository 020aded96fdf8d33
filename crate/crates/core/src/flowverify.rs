//! Numerical checks of generators on concrete solutions.
//!
//! The infinitesimal check evaluates the extended operator on the jet of a
//! numerical solution. The finite check pushes the solution through the flow
//! of the generator and evaluates the equation on the image curve.

use crate::classify::Generator;
use crate::funcs::{quintic_hermite, FnBank, TimeFn};
use crate::nde::NdeSpec;
use crate::ndesolve::{solve_homogeneous_slot, InitialFunction, SolveError, Trajectory};
use crate::prolong::{apply_operator, prolong, InfinitesimalAnsatz};
use crate::symexpr::{eval_numeric, Env, Expr, ExprError, JetVar};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("flow is not evaluable at t = {t}, x = {x}")]
    NotEvaluable { t: f64, x: f64 },
    #[error("image of the time axis is not increasing near t = {0}")]
    NotMonotone(f64),
    #[error("no admissible sample points")]
    NoSamples,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowConfig {
    pub delta: f64,
    /// RK4 steps in the group parameter.
    pub substeps: usize,
    pub steps_per_delay: usize,
    /// Trajectory length in delays.
    pub delays: usize,
    pub tol_inf: f64,
    pub tol_fin: f64,
    pub tol_group: f64,
    pub tol_identity: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            delta: 0.25,
            substeps: 64,
            steps_per_delay: 64,
            delays: 4,
            tol_inf: 1e-6,
            tol_fin: 1e-4,
            tol_group: 1e-7,
            tol_identity: 1e-12,
        }
    }
}

/// A generator compiled for numerical work.
#[derive(Clone)]
pub struct Flow {
    pub ansatz: InfinitesimalAnsatz,
    omega: Expr,
    upsilon: Expr,
    ups_t: Expr,
    ups_tt: Expr,
    bank: FnBank,
    r: f64,
}

impl Flow {
    pub fn new(ansatz: InfinitesimalAnsatz, bank: FnBank, r: f64) -> Result<Self, FlowError> {
        let pr = prolong(&ansatz)?;
        Ok(Flow { omega: ansatz.omega.clone(), upsilon: ansatz.upsilon.clone(), ups_t: pr.ups_t, ups_tt: pr.ups_tt, ansatz, bank, r })
    }

    /// Compiles `g` with coefficient atoms from `spec`, the generator and `rho`.
    pub fn for_generator(spec: &NdeSpec, g: &Generator, rho: Option<TimeFn>) -> Result<Self, FlowError> {
        let mut bank = spec.bank().overlay(&g.bank);
        if let Some(rho) = rho {
            bank.insert("rho", rho);
        }
        Flow::new(g.ansatz()?, bank, spec.r.value)
    }

    pub fn bank(&self) -> &FnBank {
        &self.bank
    }

    fn env(&self, y: &[f64]) -> Env<f64> {
        let mut env = Env::new().param("r", self.r);
        for (v, val) in [JetVar::T, JetVar::X, JetVar::X1, JetVar::X2].iter().zip(y) {
            env.put(*v, *val);
        }
        env
    }

    /// d/d(delta) of (t, x, x', x''), truncated to the length of `y`.
    fn field(&self, y: &[f64]) -> Result<Vec<f64>, FlowError> {
        let env = self.env(y);
        let exprs = [&self.omega, &self.upsilon, &self.ups_t, &self.ups_tt];
        let mut out = Vec::with_capacity(y.len());
        for e in exprs.iter().take(y.len()) {
            let v = eval_numeric(e, &env, &self.bank).map_err(|_| FlowError::NotEvaluable { t: y[0], x: y[1] })?;
            out.push(v);
        }
        Ok(out)
    }

    /// RK4 in the group parameter on (t, x) or the prolonged jet.
    pub fn run(&self, y0: &[f64], delta: f64, substeps: usize) -> Result<Vec<f64>, FlowError> {
        let mut y = y0.to_vec();
        if delta == 0.0 {
            return Ok(y);
        }
        let h = delta / substeps as f64;
        let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        for _ in 0..substeps {
            let k1 = self.field(&y)?;
            let k2 = self.field(&add(&y, &k1, h / 2.0))?;
            let k3 = self.field(&add(&y, &k2, h / 2.0))?;
            let k4 = self.field(&add(&y, &k3, h))?;
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NotEvaluable { t: y0[0], x: y0[1] });
        }
        Ok(y)
    }

    pub fn point(&self, t: f64, x: f64, delta: f64, substeps: usize) -> Result<(f64, f64), FlowError> {
        let y = self.run(&[t, x], delta, substeps)?;
        Ok((y[0], y[1]))
    }
}

/// rho(t) from a seed initial function on the spec's homogeneous equation.
pub fn rho_fn(spec: &NdeSpec, seed: &str, delays: usize, steps: usize) -> Result<TimeFn, FlowError> {
    let mut hom = spec.clone();
    hom.h = crate::nde::CoeffDescriptor::zero();
    let seed = InitialFunction::parse(seed)?;
    let t_end = spec.t0 + spec.r.value * delays as f64;
    Ok(Arc::new(solve_homogeneous_slot::<f64>(&hom, &seed, t_end, steps)?).into_fn())
}

/// Nodes of a solution including the history, with both one-sided x''.
struct Nodes {
    t: Vec<f64>,
    jet: Vec<[f64; 2]>,
    xpp: Vec<[f64; 2]>,
    /// Index of the node at t0.
    first: usize,
    per_delay: usize,
}

fn nodes(tr: &Trajectory<f64>) -> Result<Nodes, FlowError> {
    let n = tr.steps_per_delay;
    let mut t = Vec::new();
    let mut jet = Vec::new();
    let mut xpp = Vec::new();
    for j in 0..n {
        let s = tr.t0 - tr.r + tr.h * j as f64;
        t.push(s);
        jet.push([tr.eval(s, 0)?, tr.eval(s, 1)?]);
        let v = tr.eval(s, 2)?;
        xpp.push([v, v]);
    }
    let last = tr.x.len() - 1;
    for i in 0..=last {
        t.push(tr.node(i));
        jet.push([tr.x[i], tr.xp[i]]);
        let left = if i == 0 { tr.xpp_left[0] } else { tr.xpp_right[i - 1] };
        let right = if i < last { tr.xpp_left[i] } else { tr.xpp_right[last - 1] };
        xpp.push([left, right]);
    }
    // x'' of the history at t0 is the left limit
    let th = &tr.theta;
    let mut env = Env::new().param("r", tr.r);
    env.put(JetVar::T, tr.t0);
    if let Ok(v) = th.eval(tr.t0, 2, &env, &crate::symexpr::NoFunctions) {
        xpp[n][0] = v;
    }
    Ok(Nodes { t, jet, xpp, first: n, per_delay: n })
}

/// Image of a solution under the flow, with quintic Hermite interpolation
/// between transformed nodes.
#[derive(Debug, Clone)]
pub struct ImageCurve {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub xp: Vec<f64>,
    /// x'' as [left limit, right limit].
    pub xpp: Vec<[f64; 2]>,
    /// Index of the image of t0.
    pub first: usize,
    pub per_delay: usize,
}

impl ImageCurve {
    pub fn span(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    pub fn eval(&self, t: f64, order: u8) -> Option<f64> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = match self.t.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i - 1,
        };
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        let l = [self.x[i], self.xp[i], self.xpp[i][1]];
        let r = [self.x[i + 1], self.xp[i + 1], self.xpp[i + 1][0]];
        Some(quintic_hermite(l, r, h, s, order))
    }

    fn breaking(&self, i: usize) -> bool {
        i % self.per_delay == self.first % self.per_delay
    }

    /// Max |lhs| over image nodes of original t >= t0 whose delayed point
    /// lies inside the image, away from images of breaking points.
    pub fn residual(&self, spec: &NdeSpec) -> Result<(f64, usize), FlowError> {
        let lhs = spec.lhs();
        let bank = spec.bank();
        let r = spec.r.value;
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for i in self.first..self.t.len() - 1 {
            if self.breaking(i) || self.breaking(i + 1) || self.breaking(i - 1) {
                continue;
            }
            let t = self.t[i];
            let td = t - r;
            if td < self.t[1] {
                continue;
            }
            // skip lookups in cells next to a breaking image
            let j = match self.t.binary_search_by(|p| p.partial_cmp(&td).unwrap()) {
                Ok(j) => j,
                Err(j) => j - 1,
            };
            if (j.saturating_sub(1)..=j + 2).any(|m| m < self.t.len() && self.breaking(m)) {
                continue;
            }
            let mut env = Env::new().param("r", r);
            env.put(JetVar::T, t);
            env.put(JetVar::X, self.x[i]);
            env.put(JetVar::X1, self.xp[i]);
            env.put(JetVar::X2, self.xpp[i][1]);
            let d = |o| self.eval(td, o).ok_or(FlowError::NoSamples);
            env.put(JetVar::XR, d(0)?);
            env.put(JetVar::X1R, d(1)?);
            env.put(JetVar::X2R, d(2)?);
            let v = eval_numeric(&lhs, &env, &bank)?;
            worst = worst.max(v.abs());
            count += 1;
        }
        if count == 0 {
            return Err(FlowError::NoSamples);
        }
        Ok((worst, count))
    }
}

/// Transforms every node of `tr` by the prolonged flow.
pub fn image_curve(flow: &Flow, tr: &Trajectory<f64>, delta: f64, substeps: usize) -> Result<ImageCurve, FlowError> {
    let nd = nodes(tr)?;
    let mut out = ImageCurve {
        t: Vec::with_capacity(nd.t.len()),
        x: Vec::new(),
        xp: Vec::new(),
        xpp: Vec::new(),
        first: nd.first,
        per_delay: nd.per_delay,
    };
    for i in 0..nd.t.len() {
        let [x, xp] = nd.jet[i];
        let [l, r] = nd.xpp[i];
        let a = flow.run(&[nd.t[i], x, xp, l], delta, substeps)?;
        let b = if l == r { a[3] } else { flow.run(&[nd.t[i], x, xp, r], delta, substeps)?[3] };
        if let Some(&prev) = out.t.last() {
            if !(a[0] > prev) {
                return Err(FlowError::NotMonotone(nd.t[i]));
            }
        }
        out.t.push(a[0]);
        out.x.push(a[1]);
        out.xp.push(a[2]);
        out.xpp.push([a[3], b]);
    }
    Ok(out)
}

/// Max |pr X(delta)| on the solution manifold at interior nodes of `tr`.
pub fn infinitesimal_residual(spec: &NdeSpec, flow: &Flow, tr: &Trajectory<f64>) -> Result<(f64, usize), FlowError> {
    let op = spec.exact(&apply_operator(&flow.ansatz, &spec.equation())?);
    let bank = flow.bank();
    let n = tr.steps_per_delay;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 1..tr.x.len() - 1 {
        if i % n == 0 {
            continue;
        }
        let env = tr.jets(tr.node(i))?;
        let v = eval_numeric(&op, &env, bank)?;
        worst = worst.max(v.abs());
        count += 1;
    }
    if count == 0 {
        return Err(FlowError::NoSamples);
    }
    Ok((worst, count))
}

/// Finite residual for each group parameter in `deltas`.
pub fn finite_check(spec: &NdeSpec, flow: &Flow, tr: &Trajectory<f64>, deltas: &[f64], substeps: usize) -> Result<Vec<(f64, f64)>, FlowError> {
    deltas.iter().map(|&d| Ok((d, image_curve(flow, tr, d, substeps)?.residual(spec)?.0))).collect()
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct GroupCheck {
    /// |flow(0) - id|
    pub identity: f64,
    /// |flow(a + b) - flow(b) flow(a)|
    pub composition: f64,
    /// |flow(-a) flow(a) - id|
    pub inverse: f64,
}

pub fn group_axioms(flow: &Flow, points: &[(f64, f64)], delta: f64, substeps: usize) -> Result<GroupCheck, FlowError> {
    let mut g = GroupCheck::default();
    let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs().max((a.1 - b.1).abs()) / (1.0 + b.1.abs());
    for &(t, x) in points {
        let id = flow.point(t, x, 0.0, substeps)?;
        g.identity = g.identity.max(dist(id, (t, x)));
        let a = flow.point(t, x, delta, substeps)?;
        let ab = flow.point(a.0, a.1, 0.5 * delta, substeps)?;
        let direct = flow.point(t, x, 1.5 * delta, 3 * substeps / 2)?;
        g.composition = g.composition.max(dist(ab, direct));
        let back = flow.point(a.0, a.1, -delta, substeps)?;
        g.inverse = g.inverse.max(dist(back, (t, x)));
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub label: String,
    pub infinitesimal: f64,
    pub finite: f64,
    pub samples: usize,
    pub group: GroupCheck,
    pub config: FlowConfig,
    pub error: Option<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        let c = &self.config;
        self.error.is_none()
            && self.infinitesimal < c.tol_inf
            && self.finite < c.tol_fin
            && self.group.identity < c.tol_identity
            && self.group.composition < c.tol_group
            && self.group.inverse < c.tol_group
    }
}

/// All numerical checks of one generator on one solution.
pub fn verify_generator(
    spec: &NdeSpec,
    g: &Generator,
    tr: &Trajectory<f64>,
    rho: Option<TimeFn>,
    cfg: &FlowConfig,
) -> VerifyReport {
    let mut rep = VerifyReport {
        label: g.label.clone(),
        infinitesimal: f64::INFINITY,
        finite: f64::INFINITY,
        samples: 0,
        group: GroupCheck { identity: f64::INFINITY, composition: f64::INFINITY, inverse: f64::INFINITY },
        config: *cfg,
        error: None,
    };
    let run = |rep: &mut VerifyReport| -> Result<(), FlowError> {
        let flow = Flow::for_generator(spec, g, rho.clone())?;
        rep.infinitesimal = infinitesimal_residual(spec, &flow, tr)?.0;
        let img = image_curve(&flow, tr, cfg.delta, cfg.substeps)?;
        let (fin, count) = img.residual(spec)?;
        rep.finite = fin;
        rep.samples = count;
        let pts: Vec<(f64, f64)> = (0..5).map(|i| {
            let t = tr.t0 + tr.r * (0.3 + 0.7 * i as f64);
            (t, tr.eval(t.min(tr.end()), 0).unwrap_or(0.5))
        }).collect();
        rep.group = group_axioms(&flow, &pts, cfg.delta, cfg.substeps)?;
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.error = Some(e.to_string());
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nde::{CoeffDescriptor, Delay};
    use crate::ndesolve::integrate;
    use std::f64::consts::PI;

    fn neutral_pi() -> NdeSpec {
        NdeSpec::new(Delay::pi()).set("k", CoeffDescriptor::int(1))
    }

    #[test]
    fn translation_flow_is_exact() {
        let f = Flow::new(InfinitesimalAnsatz::parse("1", "0").unwrap(), FnBank::new(), 1.0).unwrap();
        let (t, x) = f.point(0.5, 2.0, 0.75, 64).unwrap();
        assert!((t - 1.25).abs() < 1e-14 && x == 2.0);
    }

    #[test]
    fn closed_form_flow() {
        // t -> t + ct d, x -> (2/c1)(exp(c1 d/2)(c1 x/2 + sin t) - sin(t + ct d))
        let (c1, ct) = (0.8, 1.3);
        let u = format!("{}*x/2 + sin(t) - {}*cos(t)", c1, 2.0 * ct / c1);
        let f = Flow::new(InfinitesimalAnsatz::parse(&ct.to_string(), &u).unwrap(), FnBank::new(), PI).unwrap();
        for (t, x, d) in [(0.3, 1.0, 0.25), (2.0, -0.5, 0.7), (5.0, 0.1, -0.4)] {
            let (tb, xb) = f.point(t, x, d, 64).unwrap();
            let want = (2.0 / c1) * ((c1 * d / 2.0f64).exp() * (c1 * x / 2.0 + f64::sin(t)) - f64::sin(t + ct * d));
            assert!((tb - (t + ct * d)).abs() < 1e-12);
            assert!((xb - want).abs() < 1e-9, "{} {}", xb, want);
        }
    }

    #[test]
    fn translation_maps_neutral_pi_solutions() {
        let spec = neutral_pi();
        let tr = integrate::<f64>(&spec, &InitialFunction::parse("sin(t) + cos(2*t)/3").unwrap(), 4.0 * PI, 64).unwrap();
        let f = Flow::new(InfinitesimalAnsatz::parse("1", "0").unwrap(), FnBank::new(), PI).unwrap();
        let img = image_curve(&f, &tr, 0.25, 64).unwrap();
        let (res, n) = img.residual(&spec).unwrap();
        assert!(n > 100);
        assert!(res < 1e-4, "{}", res);
    }

    #[test]
    fn wrong_generator_is_rejected() {
        let spec = neutral_pi();
        let tr = integrate::<f64>(&spec, &InitialFunction::parse("sin(t)").unwrap(), 4.0 * PI, 64).unwrap();
        let f = Flow::new(InfinitesimalAnsatz::parse("0", "t^2").unwrap(), FnBank::new(), PI).unwrap();
        assert!(infinitesimal_residual(&spec, &f, &tr).unwrap().0 > 1e-3);
        let img = image_curve(&f, &tr, 0.25, 64).unwrap();
        assert!(img.residual(&spec).unwrap().0 > 1e-3);
    }

    #[test]
    fn group_axioms_hold_for_scaling() {
        let f = Flow::new(InfinitesimalAnsatz::parse("sin(2*t)", "cos(2*t)*x").unwrap(), FnBank::new(), PI).unwrap();
        let g = group_axioms(&f, &[(0.3, 1.0), (1.7, -2.0)], 0.25, 64).unwrap();
        assert!(g.identity < 1e-12 && g.composition < 1e-7 && g.inverse < 1e-7, "{:?}", g);
    }

    #[test]
    fn rho_is_a_solution() {
        let spec = neutral_pi();
        let rho = rho_fn(&spec, "sin(t)", 4, 64).unwrap();
        assert!((rho(2.0, 0).unwrap() - 2.0f64.sin()).abs() < 1e-6);
        assert!(rho(2.0, 3).is_none());
    }

    fn ex1_solution() -> Trajectory<f64> {
        integrate::<f64>(&neutral_pi(), &InitialFunction::parse("sin(t)").unwrap(), 4.0 * PI, 64).unwrap()
    }

    fn flow(w: &str, u: &str) -> Flow {
        Flow::new(InfinitesimalAnsatz::parse(w, u).unwrap(), FnBank::new(), PI).unwrap()
    }

    #[test]
    fn neutral_pi_flow_point() {
        let (t, x) = flow("1", "2*x/2 + sin(t) - cos(t)").point(0.0, 0.0, 0.1, 64).unwrap();
        assert!((t - 0.1).abs() < 1e-14);
        assert!((x - (0.1f64.exp() * 0.0 - 0.1f64.sin())).abs() < 1e-8);
        let (_, x) = flow("0", "x").point(1.0, 3.0, 0.7, 64).unwrap();
        assert!((x - 3.0 * 0.7f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn neutral_pi_finite_checks() {
        let spec = neutral_pi();
        let tr = ex1_solution();
        for (_, res) in finite_check(&spec, &flow("1", "0"), &tr, &[-0.5, -0.2, 0.2, 0.5], 64).unwrap() {
            assert!(res < 1e-5, "{}", res);
        }
        assert!(finite_check(&spec, &flow("0", "x"), &tr, &[1.0], 64).unwrap()[0].1 < 1e-5);
        let bad = flow("0", "t*x");
        assert!(finite_check(&spec, &bad, &tr, &[0.2], 64).unwrap()[0].1 > 1e-2);
        assert!(infinitesimal_residual(&spec, &bad, &tr).unwrap().0 > 1e-2);
    }

    #[test]
    fn rho_shift_scales_the_sine() {
        let spec = neutral_pi();
        let tr = ex1_solution();
        let f = flow("0", "sin(t)");
        assert!(infinitesimal_residual(&spec, &f, &tr).unwrap().0 < 1e-6);
        let img = image_curve(&f, &tr, 0.5, 64).unwrap();
        for i in (0..img.t.len()).step_by(17) {
            assert!((img.x[i] - 1.5 * img.t[i].sin()).abs() < 1e-6);
        }
        assert!(img.residual(&spec).unwrap().0 < 1e-6);
    }
}
