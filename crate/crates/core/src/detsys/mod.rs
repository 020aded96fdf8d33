//! Determining equations for point symmetries of the reduced linear equation
//! x'' + b x'(t-r) + c x + d x(t-r) + k x''(t-r) = 0.

pub mod golden;
mod integrate;
mod zero;

pub use integrate::first_integral;
pub use zero::{
    apply_assumptions, delay_periodic, is_zero, is_zero_with, Assumption, Property, TrigPoly, ZeroConfig, ZeroMethod,
    ZeroVerdict,
};

use crate::funcs::TimeFn;
use crate::nde::{CoeffKind, NdeSpec};
use crate::prolong::{apply_operator, operator_unsubstituted, EquationResidual, InfinitesimalAnsatz};
use crate::symexpr::{
    collect, diff, normalize, rename_fn, same_up_to_scale, shift, substitute, substitute_fn, Bindings, Expr,
    ExprError, FieldFn, FnArg, JetMonomial, JetVar, MAX_COEFF_ORDER,
};
use serde_json::{json, Value};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum DetsysError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("equation is not in reduced form (a = 0, h = 0)")]
    NotReduced,
    #[error("wrong stage: {0}")]
    Stage(String),
    #[error("elimination `{0}` not supported by the split system")]
    Elimination(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Split,
    Reduced,
    Canonical,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Split => "split",
            Stage::Reduced => "reduced",
            Stage::Canonical => "canonical",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    /// Jet monomial the residual multiplies, or a derived name.
    pub label: String,
    pub monomial: Option<JetMonomial>,
    pub residual: Expr,
    /// Matched reference form, see [`golden`].
    pub tag: Option<String>,
    pub note: Option<String>,
}

impl Equation {
    pub fn new(label: &str, residual: Expr) -> Self {
        let residual = normalize(&residual);
        let tag = golden::match_tag(&residual).map(str::to_string);
        Equation { label: label.to_string(), monomial: JetMonomial::parse_label(label), residual, tag, note: None }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

/// f(t) = f(t - r).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalConstraint {
    pub function: String,
}

impl FunctionalConstraint {
    pub fn residual(&self) -> Expr {
        normalize(&(Expr::coeff(&self.function) - Expr::coeff_r(&self.function, 0)))
    }

    pub fn check(&self, f: &TimeFn, r: f64, t0: f64) -> bool {
        delay_periodic(f, r, t0)
    }
}

impl fmt::Display for FunctionalConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{0}(t) = {0}(t-r)", self.function)
    }
}

#[derive(Debug, Clone)]
pub struct DeterminingSystem {
    pub stage: Stage,
    pub equations: Vec<Equation>,
    pub assumptions: Vec<Assumption>,
    pub functional_constraints: Vec<FunctionalConstraint>,
    pub eliminations: Vec<String>,
    pub annotations: Vec<String>,
    /// Left-hand side of the equation the system was derived from.
    pub lhs: Option<Expr>,
    pub omega: Option<Expr>,
    pub upsilon: Option<Expr>,
}

impl DeterminingSystem {
    fn empty(stage: Stage) -> Self {
        DeterminingSystem {
            stage,
            equations: Vec::new(),
            assumptions: Vec::new(),
            functional_constraints: Vec::new(),
            eliminations: Vec::new(),
            annotations: Vec::new(),
            lhs: None,
            omega: None,
            upsilon: None,
        }
    }

    pub fn equation(&self, label: &str) -> Option<&Equation> {
        self.equations.iter().find(|e| e.label == label)
    }

    pub fn tagged(&self, tag: &str) -> Option<&Equation> {
        self.equations.iter().find(|e| e.tag.as_deref() == Some(tag))
    }

    /// Coefficient of a monomial given by its label, e.g. `x1*x2r`.
    pub fn coefficient(&self, label: &str) -> Expr {
        let m = JetMonomial::parse_label(label);
        self.equations
            .iter()
            .find(|e| e.monomial.is_some() && e.monomial == m)
            .map(|e| e.residual.clone())
            .unwrap_or_else(Expr::zero)
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &Equation> {
        self.equations.iter().filter(|e| !e.residual.is_zero_literal())
    }

    pub fn report(&self) -> Value {
        json!({
            "stage": self.stage.to_string(),
            "equations": self.equations.iter().map(|e| json!({
                "label": e.label,
                "residual": e.residual.to_string(),
                "tag": e.tag,
                "note": e.note,
            })).collect::<Vec<_>>(),
            "assumptions": self.assumptions.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            "functional_constraints": self.functional_constraints.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "eliminations": self.eliminations,
            "annotations": self.annotations,
            "omega": self.omega.as_ref().map(|e| e.to_string()),
            "upsilon": self.upsilon.as_ref().map(|e| e.to_string()),
        })
    }

    pub fn render(&self) -> String {
        let mut s = format!("determining system ({})\n", self.stage);
        for e in &self.equations {
            s += &format!("  [{}] {} = 0", e.label, e.residual);
            if let Some(t) = &e.tag {
                s += &format!("   <{}>", t);
            }
            if let Some(n) = &e.note {
                s += &format!("   ; {}", n);
            }
            s += "\n";
        }
        for c in &self.functional_constraints {
            s += &format!("  constraint: {}\n", c);
        }
        for a in &self.assumptions {
            s += &format!("  assume: {}\n", a);
        }
        for e in &self.eliminations {
            s += &format!("  eliminated: {}\n", e);
        }
        for a in &self.annotations {
            s += &format!("  note: {}\n", a);
        }
        if let (Some(w), Some(u)) = (&self.omega, &self.upsilon) {
            s += &format!("  omega = {}\n  upsilon = {}\n", w, u);
        }
        s
    }
}

/// The invariance condition: extended operator applied to the equation with
/// x'' eliminated.
pub fn invariance_residual(spec: &NdeSpec, a: &InfinitesimalAnsatz) -> Result<Expr, DetsysError> {
    if !spec.is_reduced() {
        return Err(DetsysError::NotReduced);
    }
    Ok(apply_operator(a, &spec.equation())?)
}

fn split_vars(residual: &Expr) -> Vec<JetVar> {
    if residual.contains_field() {
        vec![JetVar::X1, JetVar::X1R, JetVar::X2R]
    } else {
        JetVar::SPLIT.to_vec()
    }
}

/// One equation per jet monomial. Residuals with unknown functions of (t, x)
/// are split in the derivative variables only.
pub fn split(residual: &Expr) -> Result<DeterminingSystem, DetsysError> {
    let groups = collect(residual, &split_vars(residual))?;
    let mut sys = DeterminingSystem::empty(Stage::Split);
    for (m, coeff) in groups {
        if !coeff.is_zero_literal() {
            sys.equations.push(Equation::new(&m.to_string(), coeff));
        }
    }
    let mut names = residual.coeff_names();
    residual.walk(&mut |e| {
        if let Expr::Field(f) = e {
            names.insert(f.name.clone());
        }
    });
    for w in ["omega", "beta"] {
        if names.contains(w) {
            sys.functional_constraints.push(FunctionalConstraint { function: w.to_string() });
        }
    }
    Ok(sys)
}

/// Splits the invariance condition of `spec` for the ansatz.
pub fn determine(spec: &NdeSpec, a: &InfinitesimalAnsatz) -> Result<DeterminingSystem, DetsysError> {
    let mut sys = split(&invariance_residual(spec, a)?)?;
    sys.lhs = Some(spec.lhs());
    sys.omega = Some(a.omega.clone());
    sys.upsilon = Some(a.upsilon.clone());
    Ok(sys)
}

fn field(name: &str, arg: FnArg, dt: u8, dx: u8) -> Expr {
    Expr::Field(FieldFn { name: name.to_string(), arg, dt, dx })
}

/// Sets every x-derivative of the field `name` to zero.
fn drop_x_derivatives(e: &Expr, name: &str) -> Expr {
    let mut b = Bindings::new();
    for arg in [FnArg::Now, FnArg::Delayed] {
        for dt in 0..=4 {
            for dx in 1..=4 {
                b.insert(field(name, arg, dt, dx), Expr::zero());
            }
        }
    }
    substitute(e, &b)
}

fn expect_proportional(coef: &Expr, target: &Expr, what: &str) -> Result<(), DetsysError> {
    match same_up_to_scale(coef, target) {
        Some(_) => Ok(()),
        None => Err(DetsysError::Elimination(what.to_string())),
    }
}

/// Replaces delayed atoms of `name` by undelayed ones (f(t) = f(t-r)).
fn undelay(e: &Expr, name: &str) -> Expr {
    let mut b = Bindings::new();
    for n in 0..=MAX_COEFF_ORDER {
        b.insert(Expr::coeff_r(name, n), Expr::coeff_d(name, n));
    }
    substitute(e, &b)
}

/// Solves `eq = 0` for an atom occurring linearly with constant coefficient.
fn solve_linear(eq: &Expr, atom: &Expr) -> Option<Expr> {
    let at = |v: Expr| substitute(eq, &Bindings::new().with(atom.clone(), v));
    let rest = at(Expr::zero());
    let lin = normalize(&(at(Expr::one()) - rest.clone()));
    let quad = normalize(&(at(Expr::int(2)) - rest.clone() * Expr::one() - lin.clone() * Expr::int(2)));
    let mut depends = false;
    rest.walk(&mut |x| depends |= x == atom);
    if lin.is_zero_literal() || !quad.is_zero_literal() || depends {
        return None;
    }
    Some(normalize(&(-(rest) / lin)))
}

/// Specializes the generic system to omega = beta(t), upsilon = gamma(t) x + rho(t).
pub fn reduce_ansatz(sys: &DeterminingSystem) -> Result<DeterminingSystem, DetsysError> {
    if sys.stage != Stage::Split || sys.omega.as_ref() != Some(&Expr::field("omega")) {
        return Err(DetsysError::Stage("reduce_ansatz needs the split system of the generic ansatz".into()));
    }
    let lhs = sys.lhs.clone().ok_or_else(|| DetsysError::Stage("system has no source equation".into()))?;
    let eq = EquationResidual::new(lhs.clone())?;
    let k = diff(&lhs, JetVar::X2R)?;
    let k_zero = k.is_zero_literal();
    let mut out = DeterminingSystem::empty(Stage::Reduced);
    out.lhs = Some(lhs.clone());
    out.assumptions = sys.assumptions.clone();

    let w_xx = field("omega", FnArg::Now, 0, 2);
    let w_x = field("omega", FnArg::Now, 0, 1);
    if !k_zero {
        expect_proportional(&sys.coefficient("x1r^3"), &(k.clone() * shift(&w_xx)?), "omega_xx")?;
        out.eliminations.push(
            "omega_xx = 0: the x1r^3 coefficient is -k(t)*omega_xx(t-r,xr), k(t) != 0, and omega^r = omega".into(),
        );
        expect_proportional(&sys.coefficient("x1*x2r"), &(k.clone() * w_x.clone()), "omega_x")?;
        out.eliminations.push("omega_x = 0: the x1*x2r coefficient is 3*k(t)*omega_x(t,x), k(t) != 0".into());
        if !matches!(k, Expr::Num(_)) {
            out.assumptions.push(Assumption::nonzero("k"));
        }
    } else {
        expect_proportional(&sys.coefficient("x1^3"), &w_xx, "omega_xx")?;
        out.eliminations.push("omega_xx = 0: the x1^3 coefficient is -omega_xx(t,x) (k = 0)".into());
        let raw = operator_unsubstituted(&InfinitesimalAnsatz::generic(), &eq)?;
        let groups = collect(&raw, &[JetVar::X1, JetVar::X2, JetVar::X1R, JetVar::X2R])?;
        let c = groups.get(&JetMonomial::parse_label("x1*x2").unwrap()).cloned().unwrap_or_else(Expr::zero);
        expect_proportional(&c, &w_x, "omega_x")?;
        out.eliminations.push(
            "omega_x = 0: k = 0, justified by the x1*x2 coefficient -3*omega_x(t,x) before x'' is eliminated".into(),
        );
    }
    let u_xx = field("upsilon", FnArg::Now, 0, 2);
    expect_proportional(&drop_x_derivatives(&sys.coefficient("x1^2"), "omega"), &u_xx, "upsilon_xx")?;
    out.eliminations.push("upsilon_xx = 0: the x1^2 coefficient is upsilon_xx - 2*omega_tx with omega_x = 0".into());

    let reduced = InfinitesimalAnsatz::reduced();
    let residual = apply_operator(&reduced, &eq)?;
    let groups = collect(&residual, &JetVar::SPLIT)?;
    let get = |l: &str| groups.get(&JetMonomial::parse_label(l).unwrap()).cloned().unwrap_or_else(Expr::zero);
    let constrain = |e: &Expr| undelay(&undelay(e, "beta"), "gamma");
    out.functional_constraints = vec![
        FunctionalConstraint { function: "beta".into() },
        FunctionalConstraint { function: "gamma".into() },
    ];

    // x' coefficient integrates to the gamma relation
    let x1 = get("x1");
    out.equations.push(Equation::new("x", get("x")));
    out.equations.push(Equation::new("x1", x1.clone()));
    let i1 = first_integral(&x1).ok_or_else(|| DetsysError::Elimination("x1 first integral".into()))?;
    let gamma_eq = normalize(&(i1 - Expr::param("c1")));
    out.equations.push(Equation::new("x1 (integrated)", gamma_eq.clone()).with_note("constant of integration c1"));
    let gamma = solve_linear(&gamma_eq, &Expr::coeff("gamma"))
        .ok_or_else(|| DetsysError::Elimination("gamma".into()))?;
    let elim_gamma = |e: &Expr| substitute_fn(e, "gamma", &gamma);

    out.equations.push(
        Equation::new("1", get("1")).with_note("all jet-free terms grouped, so rho solves the homogeneous equation"),
    );
    let x2r = constrain(&get("x2r"));
    let mut eq_x2r = Equation::new("x2r", x2r.clone());
    if !x2r.is_zero_literal() {
        let kcoef = substitute(&x2r, &Bindings::new().with(Expr::coeff("beta"), Expr::one()));
        if kcoef.coeff_names().is_empty() && !is_zero(&kcoef, &[]).zero {
            eq_x2r = eq_x2r.with_note("k'(t) != 0 forces beta = 0");
            out.annotations.push("k nonconstant: beta = 0 is forced".into());
        } else {
            out.annotations.push("beta*k'(t) = 0: k constant or beta = 0".into());
        }
    }
    out.equations.push(eq_x2r);
    let x1r = elim_gamma(&constrain(&get("x1r")))?;
    out.equations.push(Equation::new("x1r", x1r.clone()));
    if let Some(i) = first_integral(&x1r) {
        out.equations.push(
            Equation::new("x1r (integrated)", i - Expr::param("c3")).with_note("constant of integration c3"),
        );
    }
    out.equations.push(Equation::new("xr", elim_gamma(&constrain(&get("xr")))?));
    out.equations.push(Equation::new("x (gamma eliminated)", elim_gamma(&get("x"))?));
    for (m, c) in &groups {
        let label = m.to_string();
        if !["1", "x", "x1", "x2r", "x1r", "xr"].contains(&label.as_str()) && !c.is_zero_literal() {
            out.equations.push(Equation::new(&label, c.clone()));
        }
    }
    out.omega = Some(Expr::coeff("beta"));
    out.upsilon = Some(normalize(&(gamma * Expr::x() + Expr::coeff("rho"))));
    Ok(out)
}

fn k_kind(lhs: &Expr) -> Result<Expr, ExprError> {
    diff(lhs, JetVar::X2R)
}

/// Rewrites the reduced system in terms of omega(t).
pub fn canonical_constraints(sys: &DeterminingSystem) -> Result<DeterminingSystem, DetsysError> {
    if sys.stage != Stage::Reduced {
        return Err(DetsysError::Stage("canonical_constraints needs a reduced system".into()));
    }
    let lhs = sys.lhs.clone().ok_or_else(|| DetsysError::Stage("system has no source equation".into()))?;
    let k = k_kind(&lhs)?;
    let w = |e: &Expr| rename_fn(e, "beta", "omega");
    let mut out = DeterminingSystem::empty(Stage::Canonical);
    out.lhs = Some(lhs);
    out.assumptions = sys.assumptions.clone();
    out.eliminations = sys.eliminations.clone();
    out.functional_constraints = vec![FunctionalConstraint { function: "omega".into() }];
    let find = |l: &str| sys.equation(l).map(|e| e.residual.clone()).unwrap_or_else(Expr::zero);

    let c_eq = w(&(Expr::int(2) * find("x (gamma eliminated)")));
    out.equations.push(Equation::new("omega-c", c_eq));
    let d_general = w(&(Expr::int(2) * find("xr")));
    let k_constant = !k.contains_var(JetVar::T) && k.coeff_names().is_empty();
    let k_symbolic = k == Expr::coeff("k");
    if k_symbolic {
        out.equations.push(Equation::new("omega-d (general k)", d_general.clone()).with_note("before k = c2"));
        let special = substitute_fn(&d_general, "k", &Expr::param("c2"))?;
        out.equations.push(Equation::new("omega-d", special).with_note("k = c2"));
    } else if k_constant {
        out.equations.push(Equation::new("omega-d", d_general));
    } else {
        out.equations.push(Equation::new("omega-d (general k)", d_general).with_note("k nonconstant"));
    }
    if let Some(e) = sys.equation("x1r (integrated)") {
        if !e.residual.is_zero_literal() {
            out.equations.push(Equation::new("omega-b", w(&e.residual)).with_note("omega = c3/b when b != 0"));
        }
    }
    let kb = w(&find("x2r"));
    if !kb.is_zero_literal() {
        let mut e = Equation::new("omega-k", kb);
        if let Some(n) = sys.equation("x2r").and_then(|e| e.note.clone()) {
            e = e.with_note(&n.replace("beta", "omega"));
            out.annotations.push("k nonconstant: omega = 0 is forced".into());
        }
        out.equations.push(e);
    }
    out.equations.push(Equation::new("rho-equation", find("1")));
    for a in &sys.annotations {
        out.annotations.push(a.replace("beta", "omega"));
    }
    out.omega = Some(Expr::coeff("omega"));
    out.upsilon = sys.upsilon.as_ref().map(w);
    Ok(out)
}

/// Whether the k-branch equation forces omega = 0 for this spec.
pub fn omega_forced_zero(spec: &NdeSpec) -> bool {
    match &spec.k.kind {
        CoeffKind::Closed(k) => diff(k, JetVar::T).map(|kp| !is_zero(&kp, &[]).zero).unwrap_or(false),
        CoeffKind::Numeric(n) => (0..20).any(|i| (n.f)(spec.t0 + 0.37 * i as f64, 1).map_or(false, |v| v.abs() > 1e-9)),
        _ => false,
    }
}

#[cfg(test)]
mod tests;
