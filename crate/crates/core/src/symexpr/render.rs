//! Text rendering in the parser's grammar.

use super::{Expr, FnArg};
use num_traits::{One, Signed};

pub(crate) fn render(e: &Expr) -> String {
    match e {
        Expr::Sum(xs) => {
            let mut out = String::new();
            for (i, x) in xs.iter().enumerate() {
                let (neg, body) = split_sign(x);
                if i == 0 {
                    if neg {
                        out.push('-');
                    }
                } else {
                    out.push_str(if neg { " - " } else { " + " });
                }
                out.push_str(&body);
            }
            out
        }
        _ => {
            let (neg, body) = split_sign(e);
            if neg {
                format!("-{}", body)
            } else {
                body
            }
        }
    }
}

/// Splits a term into its sign and the rendering of its magnitude.
fn split_sign(e: &Expr) -> (bool, String) {
    match e {
        Expr::Num(q) if q.is_negative() => (true, (-q).to_string()),
        Expr::Product(fs) if matches!(fs.first(), Some(Expr::Num(q)) if q.is_negative()) => {
            let q = match &fs[0] {
                Expr::Num(q) => -q,
                _ => unreachable!(),
            };
            let mut parts: Vec<String> = Vec::new();
            if !q.is_one() {
                parts.push(q.to_string());
            }
            parts.extend(fs[1..].iter().map(factor));
            if parts.is_empty() {
                parts.push("1".into());
            }
            (true, parts.join("*"))
        }
        Expr::Product(fs) => (false, fs.iter().map(factor).collect::<Vec<_>>().join("*")),
        _ => (false, atomic(e)),
    }
}

fn factor(e: &Expr) -> String {
    match e {
        Expr::Sum(_) | Expr::Product(_) => format!("({})", render(e)),
        Expr::Num(q) if q.is_negative() => format!("({})", q),
        _ => atomic(e),
    }
}

fn atomic(e: &Expr) -> String {
    match e {
        Expr::Num(q) => q.to_string(),
        Expr::Pi => "pi".into(),
        Expr::Param(p) => match &p.value {
            Some(v) => format!("({})", v),
            None => p.name.clone(),
        },
        Expr::Var(v) => v.name().into(),
        Expr::Coeff(c) => format!(
            "{}{}({})",
            c.name,
            "'".repeat(c.order as usize),
            if c.arg == FnArg::Now { "t" } else { "t-r" }
        ),
        Expr::Field(f) => {
            let subs = format!("{}{}", "t".repeat(f.dt as usize), "x".repeat(f.dx as usize));
            format!(
                "{}{}{}({})",
                f.name,
                if subs.is_empty() { "" } else { "_" },
                subs,
                if f.arg == FnArg::Now { "t,x" } else { "t-r,xr" }
            )
        }
        Expr::Pow(b, n) => {
            let base = match **b {
                Expr::Sum(_) | Expr::Product(_) | Expr::Pow(..) | Expr::Num(_) => format!("({})", render(b)),
                _ => atomic(b),
            };
            format!("{}^{}", base, n)
        }
        Expr::Apply(f, a) => format!("{}({})", f.name(), render(a)),
        Expr::Sum(_) | Expr::Product(_) => format!("({})", render(e)),
    }
}

#[cfg(test)]
mod tests {
    use crate::symexpr::{normalize, parse};

    #[test]
    fn round_trip() {
        for s in [
            "x1^2*b(t-r)",
            "-1/2*beta'(t) + c1/2 - x",
            "sin(2*t)*x^-1 - (1 + t)^-2",
            "omega_tx(t,x)*x1r^3 - 3*pi",
            "exp(-t/2)*k''(t-r)",
        ] {
            let e = normalize(&parse(s).unwrap());
            let again = normalize(&parse(&e.to_string()).unwrap());
            assert_eq!(e, again, "{}", s);
        }
    }

    #[test]
    fn readable() {
        assert_eq!(normalize(&parse("x - 2*t").unwrap()).to_string(), "-2*t + x");
    }
}
