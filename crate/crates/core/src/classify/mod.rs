//! Group classification of the reduced equation.
//!
//! After the first-derivative term and the forcing are removed the equation
//! falls into one of twelve cases, decided by which of b, d, k vanish, whether
//! k is constant and the shape of d. Each case lists its generators; those
//! built from omega are checked against the determining equations and
//! demoted to candidates when they fail.

pub mod compat;
pub mod omega;
pub mod reduce;

pub use compat::{compatibility_c, determining_check, CForm, Compatibility, DeterminingCheck, OmegaRef};
pub use omega::{combine, omega_ode_solve, periodic_split, OmegaError, OmegaGrid, OmegaOde, OmegaSolution, PeriodicSplit};
pub use reduce::{homogenize, remove_first_derivative, FirstDerivativeRemoval, Homogenized, Particular};

use crate::funcs::{closed_fn, FnBank, TimeFn};
use crate::nde::{CoeffKind, NdeSpec, SLOTS};
use crate::ndesolve::SolveError;
use crate::prolong::InfinitesimalAnsatz;
use crate::symexpr::{diff, normalize, Expr, ExprError, JetVar, Rational};
use num_traits::FromPrimitive;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("coefficient `{0}` is not concrete")]
    NotConcrete(String),
    #[error("omega vanishes on the sample grid")]
    OmegaVanishes,
    #[error("particular solution residual {0:.3e} exceeds 1e-6")]
    Particular(f64),
    #[error("reduction: {0}")]
    Reduction(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Solve(SolveError),
    #[error(transparent)]
    Omega(#[from] OmegaError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CaseId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
    C12,
}

impl CaseId {
    pub const ALL: [CaseId; 12] = [
        CaseId::C1,
        CaseId::C2,
        CaseId::C3,
        CaseId::C4,
        CaseId::C5,
        CaseId::C6,
        CaseId::C7,
        CaseId::C8,
        CaseId::C9,
        CaseId::C10,
        CaseId::C11,
        CaseId::C12,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::C1 => "C1",
            CaseId::C2 => "C2",
            CaseId::C3 => "C3",
            CaseId::C4 => "C4",
            CaseId::C5 => "C5",
            CaseId::C6 => "C6",
            CaseId::C7 => "C7",
            CaseId::C8 => "C8",
            CaseId::C9 => "C9",
            CaseId::C10 => "C10",
            CaseId::C11 => "C11",
            CaseId::C12 => "C12",
        }
    }

    pub fn parse(s: &str) -> Option<CaseId> {
        CaseId::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(s))
    }

    pub fn description(self) -> &'static str {
        match self {
            CaseId::C1 => "k not constant",
            CaseId::C2 => "k constant, b != 0, d != 0",
            CaseId::C3 => "k constant != 1, b != 0, d = 0",
            CaseId::C4 => "k = 1, b != 0, d = 0",
            CaseId::C5 => "k constant, b = 0, d generic",
            CaseId::C6 => "k constant, b = 0, d proportional to exp(t)",
            CaseId::C7 => "k constant, b = 0, d proportional to sin(t)",
            CaseId::C8 => "k constant, b = 0, d proportional to t^m",
            CaseId::C9 => "k constant, b = 0, d constant",
            CaseId::C10 => "k = 0, b != 0, d != 0",
            CaseId::C11 => "k = 0, b != 0, d = 0",
            CaseId::C12 => "k = 0, b = 0, d != 0",
        }
    }
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Closed,
    /// Depends on an arbitrary solution rho of the equation.
    Parametric,
    /// omega known only numerically.
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorStatus {
    Admitted,
    Candidate(String),
}

impl GeneratorStatus {
    pub fn admitted(&self) -> bool {
        matches!(self, GeneratorStatus::Admitted)
    }
}

/// omega d/dt + upsilon d/dx; coefficient atoms in omega, upsilon resolve through `bank`.
#[derive(Clone)]
pub struct Generator {
    pub label: String,
    pub omega: Expr,
    pub upsilon: Expr,
    pub kind: GeneratorKind,
    pub status: GeneratorStatus,
    pub required: bool,
    pub bank: FnBank,
    pub check: Option<DeterminingCheck>,
}

impl std::fmt::Debug for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Generator")
            .field("label", &self.label)
            .field("omega", &self.omega.to_string())
            .field("upsilon", &self.upsilon.to_string())
            .field("kind", &self.kind)
            .field("status", &self.status)
            .finish()
    }
}

impl Generator {
    pub fn ansatz(&self) -> Result<InfinitesimalAnsatz, ExprError> {
        InfinitesimalAnsatz::new(self.omega.clone(), self.upsilon.clone())
    }

    pub fn is_rho(&self) -> bool {
        self.kind == GeneratorKind::Parametric
    }

    fn report(&self) -> Value {
        let (status, reason) = match &self.status {
            GeneratorStatus::Admitted => ("admitted", Value::Null),
            GeneratorStatus::Candidate(r) => ("candidate", json!(r)),
        };
        json!({
            "label": self.label,
            "omega": self.omega.to_string(),
            "upsilon": self.upsilon.to_string(),
            "kind": self.kind,
            "status": status,
            "reason": reason,
            "max_residual": self.check.map(|c| c.max()),
        })
    }
}

#[derive(Clone)]
pub struct ClassificationResult {
    pub case: Option<CaseId>,
    pub trace: Vec<String>,
    pub generators: Vec<Generator>,
    pub compatibility: Vec<Compatibility>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    /// The equation that was classified.
    pub reduced: NdeSpec,
    pub removal: Option<FirstDerivativeRemoval>,
}

impl ClassificationResult {
    pub fn admitted(&self) -> impl Iterator<Item = &Generator> {
        self.generators.iter().filter(|g| g.status.admitted())
    }

    pub fn exit_code(&self) -> i32 {
        if self.case.is_none() {
            2
        } else if !self.warnings.is_empty() {
            3
        } else {
            0
        }
    }

    pub fn report(&self) -> Value {
        json!({
            "case": self.case.map(|c| c.name()),
            "description": self.case.map(|c| c.description()),
            "trace": self.trace,
            "generators": self.generators.iter().map(Generator::report).collect::<Vec<_>>(),
            "compatibility": self.compatibility,
            "warnings": self.warnings,
            "notes": self.notes,
            "reduced": self.reduced.to_value(),
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        match self.case {
            Some(c) => writeln!(s, "case {}: {}", c, c.description()).unwrap(),
            None => writeln!(s, "outside the classification").unwrap(),
        }
        for t in &self.trace {
            writeln!(s, "  - {}", t).unwrap();
        }
        if !self.generators.is_empty() {
            writeln!(s, "generators:").unwrap();
        }
        for g in &self.generators {
            let tag = match &g.status {
                GeneratorStatus::Admitted => "admitted".to_string(),
                GeneratorStatus::Candidate(r) => format!("candidate: {}", r),
            };
            writeln!(s, "  {}  [{}]", g.label, tag).unwrap();
            writeln!(s, "    omega = {}", g.omega).unwrap();
            writeln!(s, "    upsilon = {}", g.upsilon).unwrap();
        }
        for c in &self.compatibility {
            let k = c.constant.map(|v| format!(" = {:.6}", v)).unwrap_or_default();
            writeln!(s, "  {}{} (spread {:.1e}, {})", c.condition, k, c.spread, if c.holds { "holds" } else { "fails" }).unwrap();
        }
        for n in &self.notes {
            writeln!(s, "note: {}", n).unwrap();
        }
        for w in &self.warnings {
            writeln!(s, "warning: {}", w).unwrap();
        }
        s
    }
}

const TOL_CLOSED: f64 = 1e-7;
const TOL_NUMERIC: f64 = 1e-6;
const TOL_PREDICATE: f64 = 1e-9;

fn rational(v: f64) -> Result<Rational, ClassifyError> {
    Rational::from_f64(v).ok_or_else(|| ClassifyError::Other(format!("{} is not finite", v)))
}

/// Sample points and coefficient functions of the equation being classified.
struct Ctx {
    spec: NdeSpec,
    ts: Vec<f64>,
    end: f64,
    b: TimeFn,
    c: TimeFn,
    d: TimeFn,
    k: TimeFn,
}

impl Ctx {
    fn new(spec: NdeSpec) -> Result<Self, ClassifyError> {
        let r = spec.r.value;
        let t0 = spec.t0;
        let (lo, end) = spec.interval.unwrap_or((t0 - r, t0 + 4.0 * r));
        let lo = lo.min(t0);
        let hs = r / 24.0;
        let first = ((lo - t0) / hs).floor() as i64;
        let last = ((end - t0) / hs).ceil() as i64;
        let ts = (first..=last).map(|i| t0 + i as f64 * hs).collect();
        let f = |s: &str| spec.coeff_fn(s).ok_or_else(|| ClassifyError::NotConcrete(s.into()));
        Ok(Ctx { b: f("b")?, c: f("c")?, d: f("d")?, k: f("k")?, ts, end, spec })
    }

    fn values(&self, f: &TimeFn, order: u8) -> Vec<f64> {
        self.ts.iter().filter_map(|&t| f(t, order)).filter(|v| v.is_finite()).collect()
    }

    fn scale(&self, f: &TimeFn) -> f64 {
        self.values(f, 0).into_iter().map(f64::abs).fold(1.0, f64::max)
    }

    fn vanishes(&self, f: &TimeFn) -> bool {
        let v = self.values(f, 0);
        !v.is_empty() && v.iter().all(|x| x.abs() <= TOL_PREDICATE)
    }

    fn constant(&self, f: &TimeFn) -> bool {
        let v = self.values(f, 1);
        let s = self.scale(f);
        !v.is_empty() && v.iter().all(|x| x.abs() <= TOL_PREDICATE * s)
    }

    /// `g` returns (value, scale) and must vanish relative to scale.
    fn relation(&self, g: impl Fn(f64) -> Option<(f64, f64)>) -> bool {
        let mut n = 0;
        for &t in &self.ts {
            if let Some((v, s)) = g(t) {
                if !v.is_finite() || !s.is_finite() {
                    continue;
                }
                n += 1;
                if v.abs() > TOL_PREDICATE * s.max(1.0) {
                    return false;
                }
            }
        }
        n > 0
    }

    fn at_t0(&self, f: &TimeFn) -> Option<f64> {
        f(self.spec.t0, 0).or_else(|| self.ts.iter().find_map(|&t| f(t, 0)))
    }

    fn min_abs(&self, f: &TimeFn) -> f64 {
        self.values(f, 0).into_iter().map(f64::abs).fold(f64::INFINITY, f64::min)
    }

    fn omega_grid(&self) -> OmegaGrid {
        let r = self.spec.r.value;
        OmegaGrid { t0: self.spec.t0, lo: self.ts[0] - 2.0 * r - 1.0, hi: self.end + r + 1.0, h: r.min(1.0) / 256.0 }
    }
}

enum Shape {
    Constant,
    Exp,
    Sin,
    Power(i32),
    Generic,
}

fn d_shape(ctx: &Ctx, dz: bool) -> Shape {
    let d = &ctx.d;
    if dz || ctx.constant(d) {
        return Shape::Constant;
    }
    if ctx.relation(|t| Some((d(t, 1)? - d(t, 0)?, d(t, 0)?.abs()))) {
        return Shape::Exp;
    }
    let at_zero = d(0.0, 0).map_or(false, |v| v.abs() <= TOL_PREDICATE * ctx.scale(d));
    if at_zero && ctx.relation(|t| Some((d(t, 2)? + d(t, 0)?, d(t, 0)?.abs() + d(t, 2)?.abs()))) {
        return Shape::Sin;
    }
    for m in (-8..=8).filter(|m| *m != 0) {
        if ctx.relation(|t| Some((t * d(t, 1)? - m as f64 * d(t, 0)?, d(t, 0)?.abs() + (t * d(t, 1)?).abs()))) {
            return Shape::Power(m);
        }
    }
    Shape::Generic
}

struct Builder<'a> {
    ctx: &'a Ctx,
    generators: Vec<Generator>,
    compatibility: Vec<Compatibility>,
    warnings: Vec<String>,
    notes: Vec<String>,
}

impl<'a> Builder<'a> {
    fn scaling(&mut self, factor: Expr, label: &str) {
        self.generators.push(Generator {
            label: label.into(),
            omega: Expr::zero(),
            upsilon: normalize(&(factor * Expr::x())),
            kind: GeneratorKind::Closed,
            status: GeneratorStatus::Admitted,
            required: true,
            bank: FnBank::new(),
            check: None,
        });
    }

    fn rho(&mut self) {
        self.generators.push(Generator {
            label: "rho(t) d/dx".into(),
            omega: Expr::zero(),
            upsilon: Expr::coeff("rho"),
            kind: GeneratorKind::Parametric,
            status: GeneratorStatus::Admitted,
            required: true,
            bank: FnBank::new(),
            check: None,
        });
    }

    fn status(&mut self, label: &str, check: &DeterminingCheck, tol: f64, required: bool, fallback: Option<String>) -> GeneratorStatus {
        if check.passes(tol) {
            return GeneratorStatus::Admitted;
        }
        let reason = fallback.unwrap_or_else(|| {
            format!("fails {} (max residual {:.2e})", check.failures(tol).join("; "), check.max())
        });
        if required {
            self.warnings.push(format!("{}: {}", label, reason));
        }
        GeneratorStatus::Candidate(reason)
    }

    fn first_integrals(&mut self, label: &str, w: &TimeFn) {
        let ctx = self.ctx;
        let mut kc = Vec::new();
        let mut kd = Vec::new();
        for &t in &ctx.ts {
            let vals = (|| {
                let (w0, w1, w2) = (w(t, 0)?, w(t, 1)?, w(t, 2)?);
                let base = w0 * w2 - 0.5 * w1 * w1;
                Some((
                    base + 2.0 * (ctx.c)(t, 0)? * w0 * w0,
                    (ctx.k)(t, 0)? * base + 2.0 * (ctx.d)(t, 0)? * w0 * w0 + (ctx.b)(t, 0)? * w0 * w1,
                ))
            })();
            if let Some((a, b)) = vals {
                kc.push(a);
                kd.push(b);
            }
        }
        self.compatibility.push(Compatibility::constant_quantity(
            &format!("{}: w w'' - w'^2/2 + 2 c w^2 = const", label),
            &kc,
            TOL_NUMERIC,
        ));
        self.compatibility.push(Compatibility::constant_quantity(
            &format!("{}: k (w w'' - w'^2/2) + 2 d w^2 + b w w' = const", label),
            &kd,
            TOL_NUMERIC,
        ));
    }

    /// Generator omega d/dt + (omega'/2) x d/dx with omega a closed expression
    /// over the coefficient atoms.
    fn closed_omega(&mut self, label: &str, omega: Expr, required: bool) -> Result<(), ClassifyError> {
        let spec = &self.ctx.spec;
        let omega = normalize(&omega);
        let upsilon = normalize(&(Expr::rat(1, 2) * diff(&omega, JetVar::T)? * Expr::x()));
        let bank = spec.bank();
        let f = closed_fn(&omega, &spec.params(), &bank)?;
        let check = determining_check(spec, &f, &self.ctx.ts);
        let kind = if omega.coeff_names().is_empty() { GeneratorKind::Closed } else { GeneratorKind::Numeric };
        let tol = if kind == GeneratorKind::Closed { TOL_CLOSED } else { TOL_NUMERIC };
        let status = self.status(label, &check, tol, required, None);
        self.first_integrals(label, &f);
        self.generators.push(Generator { label: label.into(), omega, upsilon, kind, status, required, bank, check: Some(check) });
        Ok(())
    }

    fn numeric_omega(&mut self, label: &str, atom: &str, f: TimeFn, required: bool, fallback: Option<String>) {
        let spec = &self.ctx.spec;
        let check = determining_check(spec, &f, &self.ctx.ts);
        let status = self.status(label, &check, TOL_NUMERIC, required, fallback);
        self.first_integrals(label, &f);
        if status.admitted() {
            let grid = &self.ctx.ts;
            if let (Some(c0), true) = ((self.ctx.c)(spec.t0, 0), grid.len() > 2) {
                if let Ok(CForm::Numeric(cf)) = compatibility_c(spec, &OmegaRef::Numeric(f.clone()), c0, grid) {
                    let diff: Vec<f64> =
                        grid.iter().filter_map(|&t| Some(cf(t, 0)? - (self.ctx.c)(t, 0)?)).collect();
                    self.compatibility.push(Compatibility::vanishing(&format!("{}: c forced by w equals c", label), &diff, 1e-4));
                }
            }
        }
        self.generators.push(Generator {
            label: label.into(),
            omega: Expr::coeff(atom),
            upsilon: normalize(&(Expr::rat(1, 2) * Expr::coeff_d(atom, 1) * Expr::x())),
            kind: GeneratorKind::Numeric,
            status,
            required,
            bank: spec.bank().with(atom, f),
            check: Some(check),
        });
    }
}

fn concrete(spec: &NdeSpec) -> Result<(), ClassifyError> {
    for s in SLOTS {
        if matches!(spec.slot(s).unwrap().kind, CoeffKind::Symbolic) {
            return Err(ClassifyError::NotConcrete(s.into()));
        }
    }
    Ok(())
}

/// Exact value of a constant coefficient when available.
fn const_expr(spec: &NdeSpec, slot: &str, value: f64) -> Result<Expr, ClassifyError> {
    match &spec.slot(slot).unwrap().kind {
        CoeffKind::Zero => Ok(Expr::zero()),
        CoeffKind::Constant(e) => Ok(e.clone()),
        _ => Ok(Expr::Num(rational(value)?)),
    }
}

/// Classifies a concrete equation and lists its generators.
pub fn classify(spec: &NdeSpec) -> Result<ClassificationResult, ClassifyError> {
    concrete(spec)?;
    let mut trace = Vec::new();
    let mut notes = Vec::new();
    let mut work = spec.clone();
    if !work.h.is_zero() {
        notes.push("h != 0: the homogeneous part is classified; shift by a particular solution to transfer the result".into());
        work.h = crate::nde::CoeffDescriptor::zero();
    }
    let removal = if work.a.is_zero() {
        None
    } else {
        let r = remove_first_derivative(&work)?;
        trace.push("a != 0: x = s(t) u with s = exp(-1/2 int a) removes the x' term".into());
        work = r.spec.clone();
        Some(r)
    };
    let ctx = Ctx::new(work)?;
    let mut bld = Builder { ctx: &ctx, generators: Vec::new(), compatibility: Vec::new(), warnings: Vec::new(), notes };
    let case = decide(&ctx, &mut trace);
    if let Some(case) = case {
        build(case, &ctx, &mut bld)?;
    } else {
        bld.notes.push("k = b = d = 0: the equation has no delay term".into());
    }
    let Builder { generators, compatibility, warnings, notes, .. } = bld;
    Ok(ClassificationResult { case, trace, generators, compatibility, warnings, notes, reduced: ctx.spec.clone(), removal })
}

fn decide(ctx: &Ctx, trace: &mut Vec<String>) -> Option<CaseId> {
    if !ctx.constant(&ctx.k) {
        trace.push("k is not constant".into());
        return Some(CaseId::C1);
    }
    let k0 = ctx.at_t0(&ctx.k).unwrap_or(0.0);
    let kz = k0.abs() <= TOL_PREDICATE;
    let bz = ctx.vanishes(&ctx.b);
    let dz = ctx.vanishes(&ctx.d);
    trace.push(if kz { "k = 0".into() } else { format!("k = {} constant", k0) });
    trace.push(if bz { "b = 0".into() } else { "b != 0".into() });
    trace.push(if dz { "d = 0".into() } else { "d != 0".into() });
    let case = if !kz {
        match (bz, dz) {
            (false, false) => CaseId::C2,
            (false, true) if (k0 - 1.0).abs() <= TOL_PREDICATE => CaseId::C4,
            (false, true) => CaseId::C3,
            (true, _) => match d_shape(ctx, dz) {
                Shape::Constant => {
                    trace.push("d constant".into());
                    CaseId::C9
                }
                Shape::Exp => {
                    trace.push("d' = d".into());
                    CaseId::C6
                }
                Shape::Sin => {
                    trace.push("d'' + d = 0, d(0) = 0".into());
                    CaseId::C7
                }
                Shape::Power(m) => {
                    trace.push(format!("t d' = {} d", m));
                    CaseId::C8
                }
                Shape::Generic => CaseId::C5,
            },
        }
    } else {
        match (bz, dz) {
            (false, false) => CaseId::C10,
            (false, true) => CaseId::C11,
            (true, false) => CaseId::C12,
            (true, true) => return None,
        }
    };
    Some(case)
}

fn build(case: CaseId, ctx: &Ctx, bld: &mut Builder) -> Result<(), ClassifyError> {
    let spec = &ctx.spec;
    let b_sym = spec.b.symbol("b");
    let half = Expr::rat(1, 2);
    match case {
        CaseId::C1 => {
            bld.scaling(Expr::one(), "x d/dx");
        }
        CaseId::C2 | CaseId::C10 => {
            bld.scaling(Expr::one(), "x d/dx");
            if ctx.min_abs(&ctx.b) < 1e-8 {
                bld.warnings.push("b vanishes on the sample grid; 1/b is singular".into());
            }
            bld.closed_omega("(1/b) d/dt + (x/2)(1/b)' d/dx", b_sym.recip(), true)?;
        }
        CaseId::C4 | CaseId::C11 => {
            bld.scaling(if case == CaseId::C4 { half } else { Expr::one() }, if case == CaseId::C4 { "(x/2) d/dx" } else { "x d/dx" });
            if ctx.constant(&ctx.b) {
                bld.closed_omega("d/dt", Expr::one(), false)?;
            } else {
                bld.closed_omega("(1/b) d/dt + (x/2)(1/b)' d/dx", b_sym.recip(), false)?;
            }
        }
        CaseId::C3 => {
            bld.scaling(half, "(x/2) d/dx");
            let k0 = ctx.at_t0(&ctx.k).unwrap_or(1.0);
            let b = &ctx.b;
            let t0 = spec.t0;
            let init = (|| {
                let (b0, b1, b2) = (b(t0, 0)?, b(t0, 1)?, b(t0, 2)?);
                Some([1.0 / b0, -b1 / (b0 * b0), (2.0 * b1 * b1 - b0 * b2) / (b0 * b0 * b0)])
            })();
            let label = "w d/dt + (x/2) w' d/dx, k w w''' + w'' = 0";
            match init.map(|y| omega_ode_solve(OmegaOde::Autonomous { c2: k0, c3: 1.0 }, y, ctx.omega_grid())) {
                Some(Ok(sol)) => {
                    let fallback = sol.truncated.map(|t| format!("omega solution stops at t = {:.4}", t));
                    bld.notes.extend(sol.warnings.iter().cloned());
                    bld.numeric_omega(label, "w1", Arc::new(sol).into_fn(), false, fallback);
                }
                _ => bld.notes.push("no omega: 1/b is not evaluable at t0".into()),
            }
        }
        CaseId::C5 | CaseId::C6 | CaseId::C7 | CaseId::C8 => {
            bld.scaling(half, "(x/2) d/dx");
            let k0 = ctx.at_t0(&ctx.k).unwrap_or(1.0);
            let grid = ctx.omega_grid();
            let ode = OmegaOde::DelayIntegral { c2: k0, d: ctx.d.clone() };
            let mut basis = Vec::new();
            for init in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
                basis.push(Arc::new(omega_ode_solve(ode.clone(), init, grid)?));
            }
            let basis: [Arc<OmegaSolution>; 3] = [basis[0].clone(), basis[1].clone(), basis[2].clone()];
            let split = periodic_split(&basis, spec.t0, spec.r.value)
                .ok_or_else(|| ClassifyError::Other("monodromy of the omega equation is not evaluable".into()))?;
            let normalized = |v: [f64; 3]| {
                let m = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
                let s = if v.iter().find(|x| x.abs() == m).map_or(1.0, |x| x.signum()) < 0.0 { -m } else { m };
                v.map(|x| x / s)
            };
            let mut i = 0;
            for v in &split.periodic {
                i += 1;
                let f = combine(&basis, &normalized(*v));
                bld.numeric_omega(&format!("w{} d/dt + (x/2) w{}' d/dx", i, i), &format!("w{}", i), f, false, None);
            }
            for v in &split.other {
                i += 1;
                let f = combine(&basis, &normalized(*v));
                bld.numeric_omega(
                    &format!("w{} d/dt + (x/2) w{}' d/dx", i, i),
                    &format!("w{}", i),
                    f,
                    false,
                    Some("w(t0 + r) state differs from w(t0); not delay-periodic".into()),
                );
            }
            if split.periodic.is_empty() {
                bld.notes.push("no delay-periodic solution of the omega equation".into());
            }
        }
        CaseId::C9 => {
            bld.closed_omega("d/dt", Expr::one(), true)?;
            let k0 = ctx.at_t0(&ctx.k).unwrap_or(1.0);
            let d0 = ctx.at_t0(&ctx.d).unwrap_or(0.0);
            let q = d0 / k0;
            if q.abs() <= TOL_PREDICATE {
                bld.scaling(Expr::one(), "x d/dx");
            } else {
                bld.scaling(half, "(x/2) d/dx");
            }
            if q > TOL_PREDICATE {
                let qe = normalize(&(const_expr(spec, "d", d0)? / const_expr(spec, "k", k0)?));
                let root = normalize(&qe.clone().sqrt());
                let arg = normalize(&(Expr::int(2) * root * Expr::t()));
                let turns = q.sqrt() * spec.r.value / std::f64::consts::PI;
                let periodic = (turns - turns.round()).abs() < 1e-9 && turns.round() >= 1.0;
                if !periodic {
                    bld.notes.push(format!("sqrt(d/k) r / pi = {:.6} is not an integer: oscillating generators are not delay-periodic", turns));
                }
                bld.closed_omega("sin(2 sqrt(d/k) t) d/dt + (x/2) w' d/dx", arg.clone().sin(), periodic)?;
                bld.closed_omega("cos(2 sqrt(d/k) t) d/dt + (x/2) w' d/dx", arg.cos(), periodic)?;
            } else if q < -TOL_PREDICATE {
                bld.notes.push("d/k < 0: the omega equation has only exponential solutions, none delay-periodic".into());
            }
        }
        CaseId::C12 => {
            bld.scaling(Expr::one(), "x d/dx");
            let d0 = ctx.at_t0(&ctx.d).unwrap_or(1.0);
            if ctx.min_abs(&ctx.d) < 1e-8 {
                bld.warnings.push("d vanishes on the sample grid; 1/sqrt(d) is singular".into());
            }
            let sd = if d0 < 0.0 { -spec.d.symbol("d") } else { spec.d.symbol("d") };
            let label = if ctx.constant(&ctx.d) {
                "(1/sqrt(d)) d/dt"
            } else {
                "(1/sqrt(d)) d/dt - d'/(4 d^(3/2)) x d/dx"
            };
            bld.closed_omega(label, sd.sqrt().recip(), true)?;
        }
    }
    bld.rho();
    Ok(())
}

#[cfg(test)]
mod tests;
