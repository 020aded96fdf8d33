//! Canonical sum-of-products form.
//!
//! Atoms are ordered Pi < Parameter < CoeffFn < FieldFn < JetVar < Apply <
//! reciprocal-of-sum. Sines and cosines absorb integer multiples of pi/2 in
//! their argument; no other function identities are used.

use super::{CoeffFn, Elementary, Expr, FieldFn, JetVar, Param, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Atom {
    Pi,
    Param(Param),
    Coeff(CoeffFn),
    Field(FieldFn),
    Var(JetVar),
    Apply(Elementary, Box<Expr>),
    /// 1/s for a primitive multi-term sum s.
    Inv(Box<Expr>),
}

pub(crate) type Mono = Vec<(Atom, i64)>;

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Poly {
    pub terms: BTreeMap<Mono, Rational>,
}

impl Poly {
    pub fn constant(q: Rational) -> Poly {
        let mut p = Poly::default();
        if !q.is_zero() {
            p.terms.insert(Vec::new(), q);
        }
        p
    }

    pub fn atom(a: Atom) -> Poly {
        let mut p = Poly::default();
        p.terms.insert(vec![(a, 1)], Rational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    fn add_term(&mut self, m: Mono, q: Rational) {
        if q.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(q);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + q;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&mut self, other: &Poly) {
        for (m, q) in &other.terms {
            self.add_term(m.clone(), q.clone());
        }
    }

    pub fn scale(&self, q: &Rational) -> Poly {
        if q.is_zero() {
            return Poly::default();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, q1) in &self.terms {
            for (m2, q2) in &other.terms {
                let m = mono_mul(m1, m2);
                let q = q1 * q2;
                if needs_fix(&m) {
                    out.add(&fix_mono(m).scale(&q));
                } else {
                    out.add_term(m, q);
                }
            }
        }
        out
    }

    pub fn powi(&self, n: u32) -> Poly {
        let mut result = Poly::constant(Rational::one());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn inverse(&self) -> Poly {
        if self.terms.len() == 1 {
            let (m, q) = self.terms.iter().next().unwrap();
            let inv_m: Mono = m.iter().map(|(a, e)| (a.clone(), -e)).collect();
            let mut p = Poly::default();
            let q = q.recip();
            if needs_fix(&inv_m) {
                return fix_mono(inv_m).scale(&q);
            }
            p.add_term(inv_m, q);
            return p;
        }
        if self.terms.is_empty() {
            return Poly::atom(Atom::Inv(Box::new(Expr::zero())));
        }
        let lc = self.terms.values().next().unwrap().clone();
        let prim = self.scale(&lc.recip());
        Poly::atom(Atom::Inv(Box::new(from_poly(&prim)))).scale(&lc.recip())
    }

    pub fn pow(&self, n: i64) -> Poly {
        if n >= 0 {
            self.powi(n as u32)
        } else {
            self.inverse().powi((-n) as u32)
        }
    }
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out: Mono = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i >= a.len() || b[j].0 < a[i].0 {
            out.push(b[j].clone());
            j += 1;
        } else {
            let e = a[i].1 + b[j].1;
            if e != 0 {
                out.push((a[i].0.clone(), e));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn needs_fix(m: &Mono) -> bool {
    m.iter().any(|(a, e)| match a {
        Atom::Inv(_) => *e < 0,
        Atom::Apply(Elementary::Sqrt, _) => e.abs() >= 2,
        _ => false,
    })
}

/// Expands reciprocal atoms raised to negative powers and reduces sqrt(u)^2.
fn fix_mono(m: Mono) -> Poly {
    let mut plain: Mono = Vec::new();
    let mut extra = Poly::constant(Rational::one());
    for (a, e) in m {
        match &a {
            Atom::Inv(s) if e < 0 => {
                extra = extra.mul(&to_poly(s).powi((-e) as u32));
            }
            Atom::Apply(Elementary::Sqrt, u) if e.abs() >= 2 => {
                let half = e / 2;
                let rest = e - 2 * half;
                extra = extra.mul(&to_poly(u).pow(half));
                if rest != 0 {
                    plain.push((a.clone(), rest));
                }
            }
            _ => plain.push((a, e)),
        }
    }
    let mut p = Poly::default();
    p.add_term(plain, Rational::one());
    p.mul(&extra)
}

pub(crate) fn to_poly(e: &Expr) -> Poly {
    match e {
        Expr::Num(q) => Poly::constant(q.clone()),
        Expr::Pi => Poly::atom(Atom::Pi),
        Expr::Param(p) => match &p.value {
            Some(v) => Poly::constant(v.clone()),
            None => Poly::atom(Atom::Param(p.clone())),
        },
        Expr::Coeff(c) => Poly::atom(Atom::Coeff(c.clone())),
        Expr::Field(c) => Poly::atom(Atom::Field(c.clone())),
        Expr::Var(v) => Poly::atom(Atom::Var(*v)),
        Expr::Sum(xs) => {
            let mut p = Poly::default();
            for x in xs {
                p.add(&to_poly(x));
            }
            p
        }
        Expr::Product(xs) => {
            let mut p = Poly::constant(Rational::one());
            for x in xs {
                if p.is_zero() {
                    break;
                }
                p = p.mul(&to_poly(x));
            }
            p
        }
        Expr::Pow(b, n) => to_poly(b).pow(*n),
        Expr::Apply(f, a) => apply_fn(*f, to_poly(a)),
    }
}

fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

fn apply_fn(f: Elementary, mut arg: Poly) -> Poly {
    let one = || Poly::constant(Rational::one());
    let zero = Poly::default;
    match f {
        Elementary::Sin | Elementary::Cos => {
            // peel off integer multiples of pi/2
            let pi_mono: Mono = vec![(Atom::Pi, 1)];
            let mut quarter = 0i64;
            if let Some(q) = arg.terms.get(&pi_mono).cloned() {
                let twice = &q * Rational::from_integer(BigInt::from(2));
                if twice.is_integer() {
                    let k = twice.to_integer().mod_floor(&BigInt::from(4));
                    quarter = k.to_i64().unwrap_or(0);
                    arg.terms.remove(&pi_mono);
                }
            }
            let (base_sin, sign) = match (f, quarter) {
                (Elementary::Sin, 0) => (true, 1),
                (Elementary::Sin, 1) => (false, 1),
                (Elementary::Sin, 2) => (true, -1),
                (Elementary::Sin, _) => (false, -1),
                (_, 0) => (false, 1),
                (_, 1) => (true, -1),
                (_, 2) => (false, -1),
                (_, _) => (true, 1),
            };
            let core = if arg.is_zero() {
                if base_sin {
                    zero()
                } else {
                    one()
                }
            } else {
                let g = if base_sin { Elementary::Sin } else { Elementary::Cos };
                Poly::atom(Atom::Apply(g, Box::new(from_poly(&arg))))
            };
            core.scale(&Rational::from_integer(BigInt::from(sign)))
        }
        Elementary::Exp if arg.is_zero() => one(),
        Elementary::Ln if arg.as_constant() == Some(Rational::one()) => zero(),
        Elementary::Sqrt => match arg.as_constant().as_ref().and_then(rational_sqrt) {
            Some(q) => Poly::constant(q),
            None => Poly::atom(Atom::Apply(f, Box::new(from_poly(&arg)))),
        },
        _ => Poly::atom(Atom::Apply(f, Box::new(from_poly(&arg)))),
    }
}

fn atom_power(a: &Atom, e: i64) -> Expr {
    let base = match a {
        Atom::Pi => Expr::Pi,
        Atom::Param(p) => Expr::Param(p.clone()),
        Atom::Coeff(c) => Expr::Coeff(c.clone()),
        Atom::Field(c) => Expr::Field(c.clone()),
        Atom::Var(v) => Expr::Var(*v),
        Atom::Apply(f, x) => Expr::Apply(*f, x.clone()),
        Atom::Inv(s) => return Expr::Pow(s.clone(), -e),
    };
    if e == 1 {
        base
    } else {
        Expr::Pow(Box::new(base), e)
    }
}

pub(crate) fn from_poly(p: &Poly) -> Expr {
    let mut terms: Vec<Expr> = Vec::with_capacity(p.terms.len());
    for (m, q) in &p.terms {
        if m.is_empty() {
            terms.push(Expr::Num(q.clone()));
            continue;
        }
        let mut factors: Vec<Expr> = Vec::with_capacity(m.len() + 1);
        if !q.is_one() {
            factors.push(Expr::Num(q.clone()));
        }
        for (a, e) in m {
            factors.push(atom_power(a, *e));
        }
        if factors.len() == 1 {
            terms.push(factors.pop().unwrap());
        } else {
            terms.push(Expr::Product(factors));
        }
    }
    match terms.len() {
        0 => Expr::zero(),
        1 => terms.pop().unwrap(),
        _ => Expr::Sum(terms),
    }
}

/// Canonical normal form. Idempotent and semantics preserving.
pub fn normalize(e: &Expr) -> Expr {
    from_poly(&to_poly(e))
}

/// If `a = lambda * b` for a nonzero rational lambda (after normalization),
/// returns lambda.
pub fn same_up_to_scale(a: &Expr, b: &Expr) -> Option<Rational> {
    let pa = to_poly(a);
    let pb = to_poly(b);
    if pa.is_zero() || pb.is_zero() {
        return if pa.is_zero() && pb.is_zero() { Some(Rational::one()) } else { None };
    }
    let (m, qa) = pa.terms.iter().next().unwrap();
    let qb = pb.terms.get(m)?;
    let lambda = qa / qb;
    let mut diff = pa.clone();
    diff.add(&pb.scale(&-lambda.clone()));
    if diff.is_zero() {
        Some(lambda)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn nf(s: &str) -> String {
        normalize(&parse(s).unwrap()).to_string()
    }

    #[test]
    fn algebraic_identities() {
        assert_eq!(nf("(t+x)^2 - t^2 - 2*t*x - x^2"), "0");
        assert_eq!(nf("2*x1 + 3*x1"), "5*x1");
        assert_eq!(nf("beta(t)*0"), "0");
        assert_eq!(nf("x/x"), "1");
    }

    #[test]
    fn constant_folding() {
        assert_eq!(nf("sin(0) + cos(0) + exp(0)"), "2");
        assert_eq!(nf("sin(t - pi) + sin(t)"), "0");
        assert_eq!(nf("cos(t + pi/2) + sin(t)"), "0");
        assert_eq!(nf("sqrt(4/9)"), "2/3");
        assert_eq!(nf("sqrt(t)^2"), "t");
    }

    #[test]
    fn no_pythagoras() {
        assert_ne!(nf("sin(t)^2 + cos(t)^2"), "1");
    }

    #[test]
    fn reciprocal_of_sum() {
        assert_eq!(nf("2*(2*t+2)^-1 - (t+1)^-1"), "0");
        assert_eq!(nf("1/(1/(t+1))"), "1 + t");
    }

    #[test]
    fn scale_matching() {
        let a = parse("2*x + 4*t").unwrap();
        let b = parse("x + 2*t").unwrap();
        assert_eq!(same_up_to_scale(&a, &b), Some(Rational::from_integer(2.into())));
        assert_eq!(same_up_to_scale(&a, &parse("x + t").unwrap()), None);
    }
}
