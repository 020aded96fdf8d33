use ndesym::classify::{classify, CaseId};
use ndesym::funcs::FnBank;
use ndesym::nde::{CoeffDescriptor, Delay, NdeSpec};
use ndesym::ndesolve::{integrate, InitialFunction};
use ndesym::prolong::{prolong_second, prolong_second_recursive, InfinitesimalAnsatz};
use ndesym::symexpr::{collect, diff, eval_numeric, normalize, shift, Env, Expr, JetVar};
use proptest::prelude::*;
use std::sync::Arc;

fn leaf(with_x1: bool) -> impl Strategy<Value = Expr> {
    let x1 = if with_x1 { Expr::var(JetVar::X1) } else { Expr::t() * Expr::x() };
    prop_oneof![
        Just(Expr::t()),
        Just(Expr::x()),
        Just(x1),
        Just(Expr::coeff("f")),
        Just(Expr::coeff_d("f", 1)),
        (-3i64..=3).prop_map(Expr::int),
        (1i64..=4, 1i64..=3).prop_map(|(n, d)| Expr::rat(n, d)),
    ]
}

/// Expressions in t, x, x', a coefficient f(t), with no division.
fn expr() -> impl Strategy<Value = Expr> {
    tree(true)
}

/// Point functions of (t, x) only.
fn point_expr() -> impl Strategy<Value = Expr> {
    tree(false)
}

fn tree(with_x1: bool) -> impl Strategy<Value = Expr> {
    leaf(with_x1).prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(|xs| xs.into_iter().fold(Expr::zero(), |a, b| a + b)),
            prop::collection::vec(inner.clone(), 2..3).prop_map(|xs| xs.into_iter().fold(Expr::one(), |a, b| a * b)),
            (inner.clone(), 2i64..=3).prop_map(|(b, n)| b.pow(n)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.prop_map(|e| (e * Expr::rat(1, 4)).exp()),
        ]
    })
}

/// Polynomials in the jet coordinates with f-dependent coefficients.
fn jet_poly() -> impl Strategy<Value = Expr> {
    let atom = prop_oneof![
        Just(Expr::x()),
        Just(Expr::var(JetVar::XR)),
        Just(Expr::var(JetVar::X1)),
        Just(Expr::var(JetVar::X1R)),
        Just(Expr::var(JetVar::X2R)),
    ];
    let coef = prop_oneof![
        (-3i64..=3).prop_map(Expr::int),
        Just(Expr::coeff("f")),
        Just(Expr::t().sin()),
    ];
    let term = (coef, prop::collection::vec(atom, 0..3)).prop_map(|(c, xs)| xs.into_iter().fold(c, |a, b| a * b));
    prop::collection::vec(term, 1..5).prop_map(|ts| ts.into_iter().fold(Expr::zero(), |a, b| a + b))
}

fn bank() -> FnBank {
    FnBank::new().with("f", Arc::new(|t: f64, order: u8| Some(match order % 4 {
        0 => (0.7 * t).sin() + 2.0,
        1 => 0.7 * (0.7 * t).cos(),
        2 => -0.49 * (0.7 * t).sin(),
        _ => -0.343 * (0.7 * t).cos(),
    })))
}

fn env(vals: [f64; 7]) -> Env<f64> {
    let mut e = Env::<f64>::new().param("r", 0.9);
    for (v, x) in JetVar::ALL.iter().zip(vals) {
        e.put(*v, x);
    }
    e
}

fn close(a: f64, b: f64) -> bool {
    (!a.is_finite() && !b.is_finite()) || (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn point() -> impl Strategy<Value = [f64; 7]> {
    prop::array::uniform7(-1.5f64..1.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalize_is_idempotent(e in expr()) {
        let n = normalize(&e);
        prop_assert_eq!(normalize(&n), n);
    }

    #[test]
    fn normalize_preserves_value(e in expr(), p in point()) {
        let env = env(p);
        let a = eval_numeric(&e, &env, &bank()).unwrap();
        let b = eval_numeric(&normalize(&e), &env, &bank()).unwrap();
        prop_assert!(close(a, b), "{} vs {}", a, b);
    }

    #[test]
    fn diff_and_shift_commute(e in expr()) {
        let a = shift(&diff(&e, JetVar::T).unwrap()).unwrap();
        let b = diff(&shift(&e).unwrap(), JetVar::T).unwrap();
        prop_assert_eq!(normalize(&(a - b)), Expr::zero());
    }

    #[test]
    fn product_rule(f in expr(), g in expr()) {
        for v in [JetVar::T, JetVar::X] {
            let lhs = diff(&(f.clone() * g.clone()), v).unwrap();
            let rhs = diff(&f, v).unwrap() * g.clone() + f.clone() * diff(&g, v).unwrap();
            prop_assert_eq!(normalize(&(lhs - rhs)), Expr::zero());
        }
    }

    #[test]
    fn collect_partitions_the_polynomial(e in jet_poly(), p in point()) {
        let parts = collect(&e, &JetVar::SPLIT).unwrap();
        let sum = parts.iter().fold(Expr::zero(), |acc, (m, c)| acc + m.to_expr() * c.clone());
        prop_assert_eq!(normalize(&(sum.clone() - e.clone())), Expr::zero());
        for c in parts.values() {
            for v in JetVar::SPLIT {
                prop_assert!(!c.contains_var(v));
            }
        }
        let env = env(p);
        let a = eval_numeric(&e, &env, &bank()).unwrap();
        let b = eval_numeric(&sum, &env, &bank()).unwrap();
        prop_assert!(close(a, b));
    }

    #[test]
    fn prolongation_forms_agree(w in point_expr(), u in point_expr()) {
        let a = InfinitesimalAnsatz::new(w, u).unwrap();
        let five = prolong_second(&a).unwrap();
        let rec = prolong_second_recursive(&a).unwrap();
        prop_assert_eq!(normalize(&(five - rec)), Expr::zero());
    }
}

fn theta(a: f64, b: f64, c: f64) -> String {
    format!("{} * sin(t) + {} * cos(2*t) + {} * t", a, b, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solutions_superpose(
        k in -0.8f64..0.8, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0,
        p in prop::array::uniform3(-1.0f64..1.0), q in prop::array::uniform3(-1.0f64..1.0), s in -2.0f64..2.0,
    ) {
        let num = |v: f64| CoeffDescriptor::parse(&format!("{}", v)).unwrap();
        let spec = NdeSpec::new(Delay::new(1.0)).set("k", num(k)).set("b", num(b)).set("c", num(c)).set("d", num(d));
        let run = |th: String| integrate::<f64>(&spec, &InitialFunction::parse(&th).unwrap(), 3.0, 32).unwrap();
        let x = run(theta(p[0], p[1], p[2]));
        let y = run(theta(q[0], q[1], q[2]));
        let z = run(theta(p[0] + s * q[0], p[1] + s * q[1], p[2] + s * q[2]));
        for i in 0..z.x.len() {
            let want = x.x[i] + s * y.x[i];
            prop_assert!((z.x[i] - want).abs() <= 1e-9 * (1.0 + want.abs()), "node {}: {} vs {}", i, z.x[i], want);
        }
    }

    #[test]
    fn constant_coefficient_cases_partition(
        k in prop_oneof![Just(0i64), Just(1), Just(2), -2i64..=2],
        b in prop_oneof![Just(0i64), -2i64..=2],
        c in -2i64..=2,
        d in prop_oneof![Just(0i64), -2i64..=2],
    ) {
        let spec = NdeSpec::new(Delay::new(1.0))
            .set("k", CoeffDescriptor::int(k)).set("b", CoeffDescriptor::int(b))
            .set("c", CoeffDescriptor::int(c)).set("d", CoeffDescriptor::int(d));
        let case = classify(&spec).unwrap().case;
        let want = match (k != 0, b != 0, d != 0) {
            (true, true, true) => Some(CaseId::C2),
            (true, true, false) => Some(if k == 1 { CaseId::C4 } else { CaseId::C3 }),
            (true, false, _) => Some(CaseId::C9),
            (false, true, true) => Some(CaseId::C10),
            (false, true, false) => Some(CaseId::C11),
            (false, false, true) => Some(CaseId::C12),
            (false, false, false) => None,
        };
        prop_assert_eq!(case, want);
    }
}
