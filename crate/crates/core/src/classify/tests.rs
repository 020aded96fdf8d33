use super::*;
use crate::nde::{CoeffDescriptor, Delay};
use crate::scenarios::{all, scenario};

fn labels(r: &ClassificationResult) -> Vec<(String, bool)> {
    r.generators.iter().map(|g| (g.label.clone(), g.status.admitted())).collect()
}

#[test]
fn every_scenario_lands_in_its_case() {
    for s in all() {
        let r = classify(&s.spec).unwrap();
        assert_eq!(r.case, s.expected, "{}: {:?}", s.name, r.trace);
    }
}

#[test]
fn omega_generators_pass_where_expected() {
    for name in ["C2", "C3", "C4", "C9", "C10", "C11", "C12", "EX2"] {
        let r = classify(&scenario(name).unwrap().spec).unwrap();
        assert!(r.warnings.is_empty(), "{}: {:?}", name, r.warnings);
        assert!(r.generators.iter().all(|g| g.status.admitted()), "{}: {:?}", name, labels(&r));
        assert!(r.compatibility.iter().all(|c| c.holds), "{}: {:?}", name, r.compatibility);
        assert_eq!(r.exit_code(), 0);
    }
}

#[test]
fn case_nine_at_resonance_has_five_generators() {
    let r = classify(&scenario("C9").unwrap().spec).unwrap();
    assert_eq!(r.admitted().count(), 5);
}

#[test]
fn neutral_pi_generators() {
    let r = classify(&scenario("EX1").unwrap().spec).unwrap();
    let l: Vec<String> = r.admitted().map(|g| g.label.clone()).collect();
    assert_eq!(l, ["d/dt", "x d/dx", "rho(t) d/dx"]);
}

#[test]
fn ex2_generators() {
    let r = classify(&scenario("EX2").unwrap().spec).unwrap();
    assert_eq!(r.admitted().count(), 3);
    let w = &r.generators.iter().find(|g| g.omega != Expr::zero()).unwrap().omega;
    assert_eq!(*w, Expr::one());
}

#[test]
fn periodic_coefficient_keeps_one_omega() {
    let r = classify(&scenario("C5").unwrap().spec).unwrap();
    let numeric: Vec<_> = r.generators.iter().filter(|g| g.kind == GeneratorKind::Numeric).collect();
    assert_eq!(numeric.len(), 3);
    assert_eq!(numeric.iter().filter(|g| g.status.admitted()).count(), 1, "{:?}", labels(&r));
    assert!(r.warnings.is_empty());
}

#[test]
fn nonperiodic_coefficients_keep_candidates_only() {
    for name in ["C6", "C8"] {
        let r = classify(&scenario(name).unwrap().spec).unwrap();
        assert!(r.generators.iter().filter(|g| g.kind == GeneratorKind::Numeric).all(|g| !g.status.admitted()), "{}", name);
        assert!(r.warnings.is_empty());
    }
}

#[test]
fn case_one_has_no_omega() {
    let r = classify(&scenario("C1").unwrap().spec).unwrap();
    assert!(r.generators.iter().all(|g| g.omega.is_zero_literal()));
}

#[test]
fn failing_required_generator_warns() {
    // C2 with c off by one: 1/b no longer works
    let mut s = scenario("C2").unwrap().spec;
    if let CoeffKind::Closed(c) = &s.c.kind {
        s.c = CoeffDescriptor::closed(c.clone() + Expr::one());
    }
    let r = classify(&s).unwrap();
    assert_eq!(r.case, Some(CaseId::C2));
    assert!(!r.warnings.is_empty());
    assert_eq!(r.exit_code(), 3);
}

#[test]
fn off_resonance_delay_drops_oscillating_generators() {
    let s = scenario("C9").unwrap().spec;
    let s = NdeSpec { r: Delay::new(1.0), ..s };
    let r = classify(&s).unwrap();
    assert_eq!(r.admitted().count(), 3);
    assert!(r.warnings.is_empty());
}

#[test]
fn no_delay_is_outside() {
    let s = NdeSpec::new(Delay::new(1.0)).set("c", CoeffDescriptor::int(1));
    let r = classify(&s).unwrap();
    assert_eq!(r.case, None);
    assert_eq!(r.exit_code(), 2);
}

#[test]
fn symbolic_coefficients_are_rejected() {
    assert!(matches!(classify(&NdeSpec::generic()), Err(ClassifyError::NotConcrete(_))));
}

#[test]
fn first_derivative_and_forcing_are_removed() {
    let s = NdeSpec::new(Delay::new(1.0))
        .set("a", CoeffDescriptor::int(2))
        .set("c", CoeffDescriptor::int(1))
        .set("k", CoeffDescriptor::int(1))
        .set("h", CoeffDescriptor::parse("sin(t)").unwrap());
    let r = classify(&s).unwrap();
    assert!(r.removal.is_some());
    assert!(r.reduced.a.is_zero() && r.reduced.h.is_zero());
    assert!(!r.notes.is_empty());
    assert!(r.case.is_some());
}

#[test]
fn report_round_trips_through_json() {
    let r = classify(&scenario("C12").unwrap().spec).unwrap();
    let v = r.report();
    assert_eq!(v["case"], "C12");
    assert_eq!(v["generators"].as_array().unwrap().len(), 3);
    assert!(r.render().contains("case C12"));
}
