//! Equation specifications for x'' + a x' + b x'(t-r) + c x + d x(t-r) + k x''(t-r) = h.

use crate::funcs::{constant_fn, CubicSpline, FnBank, TimeFn};
use crate::prolong::EquationResidual;
use crate::symexpr::{normalize, parse, substitute, Bindings, Expr, ExprError, JetVar, Rational};
use num_traits::{FromPrimitive, ToPrimitive};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("malformed spec JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("coefficient `{slot}`: {msg}")]
    Coefficient { slot: String, msg: String },
    #[error("delay: {0}")]
    Delay(String),
    #[error("{0}")]
    Other(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Tabulated or user-supplied coefficient with derivatives up to order 3.
#[derive(Clone)]
pub struct NumericCoeff {
    pub label: String,
    pub f: TimeFn,
}

impl fmt::Debug for NumericCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NumericCoeff({})", self.label)
    }
}

#[derive(Debug, Clone)]
pub enum CoeffKind {
    Zero,
    /// Free of t; may be a named constant such as `c2`.
    Constant(Expr),
    Closed(Expr),
    Numeric(NumericCoeff),
    /// Arbitrary function, kept as the atom `slot(t)`.
    Symbolic,
}

#[derive(Debug, Clone)]
pub struct CoeffDescriptor {
    pub kind: CoeffKind,
    pub nonvanishing: Option<bool>,
}

impl CoeffDescriptor {
    pub fn zero() -> Self {
        CoeffDescriptor { kind: CoeffKind::Zero, nonvanishing: None }
    }

    pub fn symbolic() -> Self {
        CoeffDescriptor { kind: CoeffKind::Symbolic, nonvanishing: None }
    }

    pub fn constant(e: Expr) -> Self {
        Self::closed(e)
    }

    pub fn int(n: i64) -> Self {
        Self::closed(Expr::int(n))
    }

    /// Normalizes: zero becomes `Zero`, t-free becomes `Constant`.
    pub fn closed(e: Expr) -> Self {
        let e = normalize(&e);
        let kind = if e.is_zero_literal() {
            CoeffKind::Zero
        } else if !e.contains_var(JetVar::T) && e.coeff_names().is_empty() {
            CoeffKind::Constant(e)
        } else {
            CoeffKind::Closed(e)
        };
        CoeffDescriptor { kind, nonvanishing: None }
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Ok(Self::closed(parse(text)?))
    }

    pub fn numeric(label: &str, f: TimeFn) -> Self {
        CoeffDescriptor { kind: CoeffKind::Numeric(NumericCoeff { label: label.to_string(), f }), nonvanishing: None }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, CoeffKind::Zero)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, CoeffKind::Zero | CoeffKind::Constant(_))
    }

    /// The atom used in symbolic residuals.
    pub fn symbol(&self, slot: &str) -> Expr {
        match &self.kind {
            CoeffKind::Zero => Expr::zero(),
            CoeffKind::Constant(e) | CoeffKind::Closed(e) => e.clone(),
            CoeffKind::Numeric(_) | CoeffKind::Symbolic => Expr::coeff(slot),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            CoeffKind::Zero => "0".into(),
            CoeffKind::Constant(e) | CoeffKind::Closed(e) => e.to_string(),
            CoeffKind::Numeric(n) => format!("numeric({})", n.label),
            CoeffKind::Symbolic => "arbitrary".into(),
        }
    }
}

/// The delay: a positive value, optionally with an exact symbolic form.
#[derive(Debug, Clone)]
pub struct Delay {
    pub value: f64,
    pub exact: Option<Expr>,
}

impl Delay {
    pub fn new(value: f64) -> Self {
        let exact = Rational::from_f64(value).filter(|q| q.to_f64() == Some(value)).map(|q| Expr::Num(q));
        Delay { value, exact }
    }

    pub fn pi() -> Self {
        Delay { value: std::f64::consts::PI, exact: Some(Expr::Pi) }
    }

    pub fn from_expr(e: &Expr) -> Result<Self, SpecError> {
        let e = normalize(e);
        let v = crate::symexpr::eval_numeric(&e, &crate::symexpr::Env::<f64>::new(), &crate::symexpr::NoFunctions)
            .map_err(|err| SpecError::Delay(err.to_string()))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(SpecError::Delay(format!("r must be positive, got {}", v)));
        }
        Ok(Delay { value: v, exact: Some(e) })
    }
}

pub const SLOTS: [&str; 6] = ["a", "b", "c", "d", "k", "h"];

#[derive(Debug, Clone)]
pub struct NdeSpec {
    pub a: CoeffDescriptor,
    pub b: CoeffDescriptor,
    pub c: CoeffDescriptor,
    pub d: CoeffDescriptor,
    pub k: CoeffDescriptor,
    pub h: CoeffDescriptor,
    pub r: Delay,
    pub t0: f64,
    pub interval: Option<(f64, f64)>,
}

impl NdeSpec {
    /// All coefficients zero, delay r.
    pub fn new(r: Delay) -> Self {
        NdeSpec {
            a: CoeffDescriptor::zero(),
            b: CoeffDescriptor::zero(),
            c: CoeffDescriptor::zero(),
            d: CoeffDescriptor::zero(),
            k: CoeffDescriptor::zero(),
            h: CoeffDescriptor::zero(),
            r,
            t0: 0.0,
            interval: None,
        }
    }

    /// The reduced equation with arbitrary b, c, d, k and symbolic r.
    pub fn generic() -> Self {
        let mut s = NdeSpec::new(Delay { value: 1.0, exact: None });
        s.b = CoeffDescriptor::symbolic();
        s.c = CoeffDescriptor::symbolic();
        s.d = CoeffDescriptor::symbolic();
        s.k = CoeffDescriptor::symbolic();
        s
    }

    pub fn set(mut self, slot: &str, c: CoeffDescriptor) -> Self {
        *self.slot_mut(slot).expect("coefficient slot") = c;
        self
    }

    pub fn slot(&self, name: &str) -> Option<&CoeffDescriptor> {
        Some(match name {
            "a" => &self.a,
            "b" => &self.b,
            "c" => &self.c,
            "d" => &self.d,
            "k" => &self.k,
            "h" => &self.h,
            _ => return None,
        })
    }

    pub fn slot_mut(&mut self, name: &str) -> Option<&mut CoeffDescriptor> {
        Some(match name {
            "a" => &mut self.a,
            "b" => &mut self.b,
            "c" => &mut self.c,
            "d" => &mut self.d,
            "k" => &mut self.k,
            "h" => &mut self.h,
            _ => return None,
        })
    }

    pub fn is_reduced(&self) -> bool {
        self.a.is_zero() && self.h.is_zero()
    }

    /// Left-hand side minus right-hand side as an expression in the jet.
    pub fn lhs(&self) -> Expr {
        let v = Expr::var;
        normalize(
            &(v(JetVar::X2)
                + self.a.symbol("a") * v(JetVar::X1)
                + self.b.symbol("b") * v(JetVar::X1R)
                + self.c.symbol("c") * Expr::x()
                + self.d.symbol("d") * v(JetVar::XR)
                + self.k.symbol("k") * v(JetVar::X2R)
                - self.h.symbol("h")),
        )
    }

    pub fn equation(&self) -> EquationResidual {
        EquationResidual::new(self.lhs()).expect("lhs is solved for x''")
    }

    /// Numeric parameters (the delay).
    pub fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("r".to_string(), self.r.value)])
    }

    /// Binds r to its exact value when one is known.
    pub fn exact(&self, e: &Expr) -> Expr {
        match &self.r.exact {
            Some(x) => substitute(e, &Bindings::new().with(Expr::delay(), x.clone())),
            None => normalize(e),
        }
    }

    /// Numeric coefficients under their slot names.
    pub fn bank(&self) -> FnBank {
        let mut bank = FnBank::new();
        for s in SLOTS {
            if let CoeffKind::Numeric(n) = &self.slot(s).unwrap().kind {
                bank.insert(s, n.f.clone());
            }
        }
        bank
    }

    /// A coefficient as a numeric function; `None` for symbolic slots.
    pub fn coeff_fn(&self, slot: &str) -> Option<TimeFn> {
        match &self.slot(slot)?.kind {
            CoeffKind::Zero => Some(constant_fn(0.0)),
            CoeffKind::Constant(e) | CoeffKind::Closed(e) => crate::funcs::closed_fn(e, &self.params(), &FnBank::new()).ok(),
            CoeffKind::Numeric(n) => Some(n.f.clone()),
            CoeffKind::Symbolic => None,
        }
    }

    /// f^(order)(t) of a coefficient, when numerically evaluable.
    pub fn coeff_value(&self, slot: &str, t: f64, order: u8) -> Option<f64> {
        let c = self.slot(slot)?;
        match &c.kind {
            CoeffKind::Zero => Some(0.0),
            CoeffKind::Constant(e) | CoeffKind::Closed(e) => {
                crate::funcs::closed_fn(e, &self.params(), &FnBank::new()).ok()?(t, order)
            }
            CoeffKind::Numeric(n) => (n.f)(t, order),
            CoeffKind::Symbolic => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, SpecError> {
        let obj = v.as_object().ok_or_else(|| SpecError::Other("spec must be a JSON object".into()))?;
        for key in obj.keys() {
            if !SLOTS.contains(&key.as_str()) && !["r", "t0", "interval", "name", "note"].contains(&key.as_str()) {
                return Err(SpecError::Other(format!("unknown field `{}`", key)));
            }
        }
        let r = match obj.get("r") {
            None => return Err(SpecError::Delay("missing `r`".into())),
            Some(Value::Number(n)) => Delay::from_expr(&number_expr(n))?,
            Some(Value::String(s)) => Delay::from_expr(&parse(s).map_err(|e| SpecError::Delay(e.to_string()))?)?,
            Some(_) => return Err(SpecError::Delay("`r` must be a number or an expression string".into())),
        };
        let mut spec = NdeSpec::new(r);
        if let Some(t0) = obj.get("t0") {
            spec.t0 = t0.as_f64().ok_or_else(|| SpecError::Other("`t0` must be a number".into()))?;
        }
        if let Some(iv) = obj.get("interval") {
            let arr = iv.as_array().filter(|a| a.len() == 2).ok_or_else(|| SpecError::Other("`interval` must be [lo, hi]".into()))?;
            let lo = arr[0].as_f64().ok_or_else(|| SpecError::Other("interval bound".into()))?;
            let hi = arr[1].as_f64().ok_or_else(|| SpecError::Other("interval bound".into()))?;
            if !(lo < hi) {
                return Err(SpecError::Other("interval must satisfy lo < hi".into()));
            }
            spec.interval = Some((lo, hi));
        }
        for s in SLOTS {
            if let Some(c) = obj.get(s) {
                *spec.slot_mut(s).unwrap() = descriptor_from_value(s, c)?;
            }
        }
        Ok(spec)
    }

    pub fn to_value(&self) -> Value {
        let mut m = serde_json::Map::new();
        for s in SLOTS {
            m.insert(s.to_string(), json!(self.slot(s).unwrap().describe()));
        }
        m.insert(
            "r".into(),
            match &self.r.exact {
                Some(e) => json!(e.to_string()),
                None => json!(self.r.value),
            },
        );
        m.insert("t0".into(), json!(self.t0));
        Value::Object(m)
    }
}

fn number_expr(n: &serde_json::Number) -> Expr {
    let text = n.to_string();
    match parse(&text) {
        Ok(e) => e,
        Err(_) => Expr::Num(Rational::from_f64(n.as_f64().unwrap_or(f64::NAN)).unwrap_or_default()),
    }
}

fn descriptor_from_value(slot: &str, v: &Value) -> Result<CoeffDescriptor, SpecError> {
    let err = |msg: &str| SpecError::Coefficient { slot: slot.to_string(), msg: msg.to_string() };
    let expr_of = |v: &Value| -> Result<Expr, SpecError> {
        match v {
            Value::Number(n) => Ok(number_expr(n)),
            Value::String(s) => parse(s).map_err(|e| err(&e.to_string())),
            _ => Err(err("expected a number or an expression string")),
        }
    };
    // shorthand: a bare number or expression string
    if v.is_number() || v.is_string() {
        return Ok(CoeffDescriptor::closed(expr_of(v)?));
    }
    let obj = v.as_object().ok_or_else(|| err("expected an object"))?;
    let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| err("missing `kind`"))?;
    let mut d = match kind {
        "zero" => CoeffDescriptor::zero(),
        "const" => {
            let e = expr_of(obj.get("value").ok_or_else(|| err("missing `value`"))?)?;
            if e.contains_var(JetVar::T) {
                return Err(err("constant depends on t"));
            }
            CoeffDescriptor::closed(e)
        }
        "closed" => {
            let e = expr_of(obj.get("expr").ok_or_else(|| err("missing `expr`"))?)?;
            if JetVar::ALL.iter().any(|&j| j != JetVar::T && e.contains_var(j)) || !e.coeff_names().is_empty() || e.contains_field() {
                return Err(err("closed coefficient must be an expression in t only"));
            }
            CoeffDescriptor::closed(e)
        }
        "numeric-table" => {
            let samples = obj.get("samples").and_then(Value::as_array).ok_or_else(|| err("missing `samples`"))?;
            let mut pts = Vec::with_capacity(samples.len());
            for s in samples {
                let pair = s.as_array().filter(|p| p.len() == 2).ok_or_else(|| err("samples are [t, value] pairs"))?;
                let t = pair[0].as_f64().ok_or_else(|| err("sample time"))?;
                let y = pair[1].as_f64().ok_or_else(|| err("sample value"))?;
                pts.push((t, y));
            }
            let spline = CubicSpline::natural(&pts).map_err(|m| err(&m))?;
            CoeffDescriptor::numeric(&format!("table[{}]", pts.len()), spline.into_fn())
        }
        other => return Err(err(&format!("unknown kind `{}`", other))),
    };
    if let Some(nv) = obj.get("nonvanishing") {
        d.nonvanishing = Some(nv.as_bool().ok_or_else(|| err("`nonvanishing` must be a boolean"))?);
    }
    Ok(d)
}

/// Numeric constant descriptor.
pub fn numeric_constant(v: f64) -> CoeffDescriptor {
    CoeffDescriptor::numeric(&format!("{}", v), constant_fn(v))
}
