//! One concrete equation per classification case plus the two worked examples.

use crate::classify::CaseId;
use crate::nde::{CoeffDescriptor, Delay, NdeSpec};
use crate::symexpr::{diff, normalize, parse, Expr, JetVar};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub spec: NdeSpec,
    pub expected: Option<CaseId>,
    /// Initial function for trajectories.
    pub theta: &'static str,
    /// Initial function of the rho solution.
    pub rho_seed: &'static str,
}

fn e(s: &str) -> Expr {
    normalize(&parse(s).expect("scenario expression"))
}

fn cd(x: Expr) -> CoeffDescriptor {
    CoeffDescriptor::closed(x)
}

fn ders(f: &Expr) -> (Expr, Expr) {
    let f1 = diff(f, JetVar::T).unwrap();
    let f2 = diff(&f1, JetVar::T).unwrap();
    (f1, f2)
}

/// c = (K b^2 + b''/b - 3/2 (b'/b)^2)/2, the c compatible with omega = 1/b, K = 1.
fn c_for_b(b: &Expr) -> Expr {
    let (b1, b2) = ders(b);
    let q = b1 / b.clone();
    Expr::rat(1, 2) * (b.clone().pow(2) + b2 / b.clone() - Expr::rat(3, 2) * q.pow(2))
}

fn spec(r: Delay) -> NdeSpec {
    NdeSpec::new(r)
}

pub fn scenario(name: &str) -> Option<Scenario> {
    let one = || CoeffDescriptor::int(1);
    let osc = || e("2 + sin(2*pi*t)");
    let (spec, expected, theta, rho_seed) = match name {
        "C1" => (
            spec(Delay::new(1.0)).set("k", cd(e("t"))).set("b", one()).set("c", one()).set("d", one()),
            Some(CaseId::C1),
            "cos(t)",
            "1 + t/2",
        ),
        "C2" => {
            let b = osc();
            let (b1, b2) = ders(&b);
            let d = Expr::rat(1, 2) * (b.clone().pow(2) + b1.clone() + b2 / b.clone() - Expr::rat(3, 2) * (b1 / b.clone()).pow(2));
            (
                spec(Delay::new(1.0)).set("b", cd(b.clone())).set("k", one()).set("c", cd(c_for_b(&b))).set("d", cd(d)),
                Some(CaseId::C2),
                "cos(t)",
                "1",
            )
        }
        "C3" => (
            spec(Delay::new(1.0)).set("b", one()).set("k", CoeffDescriptor::int(2)).set("c", one()),
            Some(CaseId::C3),
            "cos(t)",
            "1 + t/3",
        ),
        "C4" => (
            spec(Delay::new(1.0)).set("b", one()).set("c", cd(e("1/4"))).set("k", one()),
            Some(CaseId::C4),
            "cos(t)",
            "1",
        ),
        "C5" => {
            let d = e("2 + cos(2*pi*t)");
            (
                spec(Delay::new(1.0)).set("d", cd(d.clone())).set("c", cd(d)).set("k", one()),
                Some(CaseId::C5),
                "cos(t)",
                "1",
            )
        }
        "C6" => (
            spec(Delay::new(1.0)).set("d", cd(e("exp(t)"))).set("c", cd(e("exp(t)"))).set("k", one()),
            Some(CaseId::C6),
            "1",
            "1",
        ),
        "C7" => (
            spec(Delay::from_expr(&e("2*pi")).unwrap())
                .set("d", cd(e("sin(t)")))
                .set("c", cd(e("sin(t)")))
                .set("k", one()),
            Some(CaseId::C7),
            "1",
            "1",
        ),
        "C8" => (
            spec(Delay::new(1.0)).set("d", cd(e("t^2"))).set("c", cd(e("t^2"))).set("k", one()),
            Some(CaseId::C8),
            "1",
            "1",
        ),
        "C9" => (
            spec(Delay::pi()).set("k", one()).set("d", one()).set("c", one()),
            Some(CaseId::C9),
            "cos(t)",
            "sin(t)",
        ),
        "C10" => {
            let b = osc();
            let (b1, _) = ders(&b);
            let d = Expr::rat(1, 2) * (b.clone().pow(2) + b1);
            (
                spec(Delay::new(1.0)).set("b", cd(b.clone())).set("d", cd(d)).set("c", cd(c_for_b(&b))),
                Some(CaseId::C10),
                "cos(t)",
                "1",
            )
        }
        "C11" => (spec(Delay::new(1.0)).set("b", one()).set("c", one()), Some(CaseId::C11), "cos(t)", "1"),
        "C12" => {
            let d = osc();
            let (d1, d2) = ders(&d);
            let c = Expr::rat(1, 2)
                * (d.clone() + d2 / (Expr::int(2) * d.clone()) - Expr::rat(5, 8) * (d1 / d.clone()).pow(2));
            (spec(Delay::new(1.0)).set("d", cd(d)).set("c", cd(c)), Some(CaseId::C12), "cos(t)", "1")
        }
        "EX1" => (spec(Delay::pi()).set("k", one()), Some(CaseId::C9), "sin(t)", "sin(t)"),
        "EX2" => (
            spec(Delay::new(1.0)).set("c", CoeffDescriptor::int(-1)).set("d", one()),
            Some(CaseId::C12),
            "1 + t",
            "1",
        ),
        _ => return None,
    };
    Some(Scenario { name: NAMES.iter().find(|n| **n == name).unwrap(), spec, expected, theta, rho_seed })
}

pub const NAMES: [&str; 14] = ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11", "C12", "EX1", "EX2"];

pub fn all() -> Vec<Scenario> {
    NAMES.iter().map(|n| scenario(n).unwrap()).collect()
}
