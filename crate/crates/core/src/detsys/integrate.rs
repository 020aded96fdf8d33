//! First integrals of total derivatives in t.
//!
//! Two rules: integration by parts on the highest derivative whose cofactor
//! does not contain the same function at a nearby order, and
//! `q g^k g' = (q/(k+1) g^(k+1))'`. Results are verified by re-differentiation.

use crate::symexpr::{diff, normalize, product_of, CoeffFn, Expr, JetVar};

fn terms(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::Sum(xs) => xs.clone(),
        z if z.is_zero_literal() => Vec::new(),
        other => vec![other.clone()],
    }
}

fn factors(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::Product(xs) => xs.clone(),
        other => vec![other.clone()],
    }
}

fn is_constant(e: &Expr) -> bool {
    !e.contains_var(JetVar::T) && e.coeff_names().is_empty() && !e.contains_field()
}

/// Splits a factor into (function atom, power).
fn atom_power(f: &Expr) -> Option<(&CoeffFn, i64)> {
    match f {
        Expr::Coeff(c) => Some((c, 1)),
        Expr::Pow(b, n) => match &**b {
            Expr::Coeff(c) => Some((c, *n)),
            _ => None,
        },
        _ => None,
    }
}

/// `q g^k g'` with q constant.
fn power_rule(term: &Expr) -> Option<Expr> {
    let fs = factors(term);
    let mut consts = Vec::new();
    let mut atoms = Vec::new();
    for f in &fs {
        if is_constant(f) {
            consts.push(f.clone());
        } else {
            atoms.push(atom_power(f)?);
        }
    }
    if atoms.len() != 2 {
        return None;
    }
    for (i, j) in [(0, 1), (1, 0)] {
        let (g, k) = atoms[i];
        let (gp, one) = atoms[j];
        if one == 1 && k >= 1 && gp.name == g.name && gp.arg == g.arg && gp.order == g.order + 1 {
            let q = product_of(consts.clone());
            return Some(q * Expr::rat(1, k + 1) * Expr::Coeff(g.clone()).pow(k + 1));
        }
    }
    None
}

/// Integration by parts step for one term.
fn parts_rule(term: &Expr) -> Option<Expr> {
    let fs = factors(term);
    let mut best: Option<(usize, u8)> = None;
    for (i, f) in fs.iter().enumerate() {
        let c = match f {
            Expr::Coeff(c) if c.order >= 1 => c,
            _ => continue,
        };
        let cofactor: Vec<&Expr> = fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).collect();
        let clash = cofactor.iter().any(|x| {
            let mut hit = false;
            x.walk(&mut |y| {
                if let Expr::Coeff(o) = y {
                    if o.name == c.name && o.arg == c.arg && o.order + 1 >= c.order {
                        hit = true;
                    }
                }
            });
            hit
        });
        if clash {
            continue;
        }
        if best.map_or(true, |(_, o)| c.order > o) {
            best = Some((i, c.order));
        }
    }
    let (i, _) = best?;
    let lowered = match &fs[i] {
        Expr::Coeff(c) => Expr::Coeff(CoeffFn { order: c.order - 1, ..c.clone() }),
        _ => unreachable!(),
    };
    let mut out = fs.clone();
    out[i] = lowered;
    Some(product_of(out))
}

/// Returns `I` with `dI/dt = e`, or `None` when the rules do not apply.
pub fn first_integral(e: &Expr) -> Option<Expr> {
    let target = normalize(e);
    let mut rest = target.clone();
    let mut acc = Expr::zero();
    for _ in 0..64 {
        if rest.is_zero_literal() {
            break;
        }
        let ts = terms(&rest);
        // highest derivative order present, so the leading term is removed first
        let order_of = |t: &Expr| {
            let mut m = 0u8;
            t.walk(&mut |y| {
                if let Expr::Coeff(c) = y {
                    m = m.max(c.order);
                }
            });
            m
        };
        let mut order: Vec<usize> = (0..ts.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(order_of(&ts[i])));
        let piece = order.iter().find_map(|&i| power_rule(&ts[i]).or_else(|| parts_rule(&ts[i])))?;
        let piece = normalize(&piece);
        rest = normalize(&(rest - diff(&piece, JetVar::T).ok()?));
        acc = normalize(&(acc + piece));
    }
    if !rest.is_zero_literal() {
        return None;
    }
    let check = normalize(&(diff(&acc, JetVar::T).ok()? - target));
    check.is_zero_literal().then_some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn p(s: &str) -> Expr {
        normalize(&parse(s).unwrap())
    }

    #[test]
    fn product_pattern() {
        assert_eq!(first_integral(&p("b(t)*beta'(t) + beta(t)*b'(t)")).unwrap(), p("b(t)*beta(t)"));
        assert_eq!(first_integral(&p("2*gamma'(t) - beta''(t)")).unwrap(), p("2*gamma(t) - beta'(t)"));
    }

    #[test]
    fn omega_pattern() {
        let i = first_integral(&p("w(t)*w'''(t)")).unwrap();
        assert_eq!(i, p("w(t)*w''(t) - w'(t)^2/2"));
        let i = first_integral(&p("c2*w(t)*w'''(t) + 2*d'(t)*w(t)^2 + 4*d(t)*w(t)*w'(t)")).unwrap();
        assert_eq!(i, p("c2*w(t)*w''(t) - c2*w'(t)^2/2 + 2*d(t)*w(t)^2"));
    }

    #[test]
    fn non_derivatives_fail() {
        assert!(first_integral(&p("b(t)*beta(t)")).is_none());
        assert!(first_integral(&p("w(t)*w''(t)")).is_none());
    }
}
