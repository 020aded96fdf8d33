//! Reference forms of the determining equations, matched up to a rational factor.

use crate::symexpr::{parse, same_up_to_scale, Expr};
use std::sync::OnceLock;

pub const TABLE: [(&str, &str); 12] = [
    ("delay-point", "beta(t) - beta(t-r)"),
    ("x-split", "gamma''(t) + 2*beta'(t)*c(t) + beta(t)*c'(t)"),
    ("gamma-integral", "gamma(t) - (beta'(t) + c1)/2"),
    ("rho-equation", "rho''(t) + b(t)*rho'(t-r) + c(t)*rho(t) + d(t)*rho(t-r) + k(t)*rho''(t-r)"),
    ("k-branch", "beta(t)*k'(t)"),
    ("xr-split", "k(t)*beta'''(t) + 2*beta(t)*d'(t) + 4*beta'(t)*d(t) + b(t)*beta''(t)"),
    ("x1r-split", "b(t)*beta'(t) + beta(t)*b'(t)"),
    ("x1r-integral", "b(t)*beta(t) - c3"),
    ("omega-c", "omega'''(t) + 4*c(t)*omega'(t) + 2*c'(t)*omega(t)"),
    ("omega-d", "c2*omega'''(t) + 2*d'(t)*omega(t) + 4*d(t)*omega'(t) + b(t)*omega''(t)"),
    ("omega-b", "b(t)*omega(t) - c3"),
    ("omega-k", "omega(t)*k'(t)"),
];

fn parsed() -> &'static Vec<(&'static str, Expr)> {
    static CELL: OnceLock<Vec<(&'static str, Expr)>> = OnceLock::new();
    CELL.get_or_init(|| TABLE.iter().map(|(tag, s)| (*tag, parse(s).expect("golden form parses"))).collect())
}

/// The reference expression for a tag.
pub fn golden(tag: &str) -> Option<&'static Expr> {
    parsed().iter().find(|(t, _)| *t == tag).map(|(_, e)| e)
}

/// First tag whose reference form equals `e` up to a nonzero rational factor.
pub fn match_tag(e: &Expr) -> Option<&'static str> {
    if e.is_zero_literal() {
        return None;
    }
    parsed().iter().find(|(_, g)| same_up_to_scale(e, g).is_some()).map(|(t, _)| *t)
}
