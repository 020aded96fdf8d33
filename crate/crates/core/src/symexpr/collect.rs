//! Coefficient extraction with respect to jet variables.

use super::normal::{from_poly, to_poly, Atom, Poly};
use super::{normalize, Expr, ExprError, FnArg, JetVar};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A monomial in jet variables, e.g. `x1r^3*x`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct JetMonomial(pub Vec<(JetVar, u32)>);

impl JetMonomial {
    pub fn one() -> Self {
        JetMonomial(Vec::new())
    }

    pub fn of(v: JetVar, n: u32) -> Self {
        JetMonomial(vec![(v, n)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, n)| n).sum()
    }

    pub fn to_expr(&self) -> Expr {
        super::product_of(self.0.iter().map(|(v, n)| Expr::Var(*v).pow(*n as i64)))
    }

    pub fn parse_label(s: &str) -> Option<JetMonomial> {
        if s == "1" {
            return Some(JetMonomial::one());
        }
        let mut out = Vec::new();
        for part in s.split('*') {
            let (name, n) = match part.split_once('^') {
                Some((a, b)) => (a, b.parse().ok()?),
                None => (part, 1),
            };
            let v = JetVar::ALL.iter().find(|v| v.name() == name)?;
            out.push((*v, n));
        }
        out.sort();
        Some(JetMonomial(out))
    }
}

impl fmt::Display for JetMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(v, n)| if *n == 1 { v.name().to_string() } else { format!("{}^{}", v.name(), n) })
            .collect();
        f.write_str(&parts.join("*"))
    }
}

fn depends(a: &Atom, v: JetVar) -> bool {
    match a {
        Atom::Var(u) => *u == v,
        Atom::Coeff(_) => v == JetVar::T,
        Atom::Field(f) => match v {
            JetVar::T => true,
            JetVar::X => f.arg == FnArg::Now,
            JetVar::XR => f.arg == FnArg::Delayed,
            _ => false,
        },
        Atom::Apply(_, e) | Atom::Inv(e) => e.contains_var(v) || field_in(e, v),
        Atom::Pi | Atom::Param(_) => false,
    }
}

fn field_in(e: &Expr, v: JetVar) -> bool {
    let mut hit = false;
    e.walk(&mut |x| match x {
        Expr::Field(f) => {
            if v == JetVar::T || (v == JetVar::X && f.arg == FnArg::Now) || (v == JetVar::XR && f.arg == FnArg::Delayed) {
                hit = true
            }
        }
        Expr::Coeff(_) if v == JetVar::T => hit = true,
        _ => {}
    });
    hit
}

/// Coefficients of `e` as a polynomial in `vars`. The constant monomial is
/// always present.
pub fn collect(e: &Expr, vars: &[JetVar]) -> Result<BTreeMap<JetMonomial, Expr>, ExprError> {
    let vars: BTreeSet<JetVar> = vars.iter().copied().collect();
    let p = to_poly(&normalize(e));
    let mut groups: BTreeMap<JetMonomial, Poly> = BTreeMap::new();
    for (mono, q) in &p.terms {
        let mut key = Vec::new();
        let mut rest = Vec::new();
        for (a, n) in mono {
            match a {
                Atom::Var(v) if vars.contains(v) => {
                    if *n < 0 {
                        return Err(ExprError::NonPolynomial(v.name().into()));
                    }
                    key.push((*v, *n as u32));
                }
                other => {
                    if let Some(v) = vars.iter().find(|v| depends(other, **v)) {
                        return Err(ExprError::NonPolynomial(v.name().into()));
                    }
                    rest.push((other.clone(), *n));
                }
            }
        }
        let mut term = Poly::default();
        term.terms.insert(rest, q.clone());
        groups.entry(JetMonomial(key)).or_default().add(&term);
    }
    let mut out: BTreeMap<JetMonomial, Expr> = groups.into_iter().map(|(k, p)| (k, from_poly(&p))).collect();
    out.entry(JetMonomial::one()).or_insert_with(Expr::zero);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    #[test]
    fn splits_by_monomial() {
        let e = parse("k(t)*omega_xx(t,x)*x1r^3 + beta(t)*x1").unwrap();
        let m = collect(&e, &[JetVar::X1, JetVar::X1R]).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[&JetMonomial::of(JetVar::X1R, 3)].to_string(), "k(t)*omega_xx(t,x)");
        assert_eq!(m[&JetMonomial::of(JetVar::X1, 1)].to_string(), "beta(t)");
        assert!(m[&JetMonomial::one()].is_zero_literal());
    }

    #[test]
    fn zero_and_square() {
        let m = collect(&Expr::zero(), &[JetVar::X]).unwrap();
        assert_eq!(m.len(), 1);
        let m = collect(&parse("(x1 + 1)^2").unwrap(), &[JetVar::X1]).unwrap();
        assert_eq!(m[&JetMonomial::of(JetVar::X1, 2)], Expr::one());
        assert_eq!(m[&JetMonomial::of(JetVar::X1, 1)], Expr::int(2));
        assert_eq!(m[&JetMonomial::one()], Expr::one());
    }

    #[test]
    fn rejects_non_polynomial() {
        assert!(collect(&parse("sin(x)").unwrap(), &[JetVar::X]).is_err());
        assert!(collect(&parse("x^-1").unwrap(), &[JetVar::X]).is_err());
        assert!(collect(&parse("omega(t,x)*x1").unwrap(), &[JetVar::X]).is_err());
    }

    #[test]
    fn label_round_trip() {
        let m = JetMonomial(vec![(JetVar::X, 1), (JetVar::X1R, 3)]);
        assert_eq!(JetMonomial::parse_label(&m.to_string()), Some(m));
    }
}
