use super::*;
use crate::nde::{CoeffDescriptor, Delay};
use crate::symexpr::parse;

fn p(s: &str) -> Expr {
    normalize(&parse(s).unwrap())
}

fn generic_reduced() -> DeterminingSystem {
    let sys = determine(&NdeSpec::generic(), &InfinitesimalAnsatz::generic()).unwrap();
    reduce_ansatz(&sys).unwrap()
}

#[test]
fn generic_cubic_delayed_coefficient() {
    let sys = determine(&NdeSpec::generic(), &InfinitesimalAnsatz::generic()).unwrap();
    let c = sys.coefficient("x1r^3");
    assert_eq!(same_up_to_scale(&c, &p("k(t)*omega_xx(t-r,xr)")), Some(crate::symexpr::Rational::from_integer((-1).into())));
    assert_eq!(sys.functional_constraints, vec![FunctionalConstraint { function: "omega".into() }]);
}

#[test]
fn residual_examples() {
    let spec = NdeSpec::new(Delay::pi()).set("k", CoeffDescriptor::int(1));
    let res = invariance_residual(&spec, &InfinitesimalAnsatz::parse("0", "sin(t)").unwrap()).unwrap();
    assert_eq!(res, p("-sin(t) - sin(t - r)"));
    assert!(spec.exact(&res).is_zero_literal());
    let zero = invariance_residual(&NdeSpec::generic(), &InfinitesimalAnsatz::parse("0", "0").unwrap()).unwrap();
    assert!(zero.is_zero_literal());
    assert!(split(&zero).unwrap().nontrivial().next().is_none());
    let mut nonreduced = NdeSpec::generic();
    nonreduced.a = CoeffDescriptor::int(1);
    assert!(matches!(invariance_residual(&nonreduced, &InfinitesimalAnsatz::reduced()), Err(DetsysError::NotReduced)));
}

#[test]
fn reduced_system_reproduces_reference_forms() {
    let sys = generic_reduced();
    for tag in ["x-split", "gamma-integral", "rho-equation", "k-branch", "x1r-split", "x1r-integral", "xr-split"] {
        assert!(sys.tagged(tag).is_some(), "missing {}\n{}", tag, sys.render());
    }
    assert_eq!(sys.functional_constraints.len(), 2);
    assert_eq!(sys.upsilon, Some(p("(beta'(t) + c1)/2*x + rho(t)")));
    assert_eq!(sys.eliminations.len(), 3);
    assert!(sys.assumptions.contains(&Assumption::nonzero("k")));
}

#[test]
fn canonical_forms() {
    let sys = canonical_constraints(&generic_reduced()).unwrap();
    for tag in ["omega-c", "omega-d", "omega-b", "omega-k", "rho-equation"] {
        assert!(sys.tagged(tag).is_some(), "missing {}\n{}", tag, sys.render());
    }
    assert_eq!(sys.upsilon, Some(p("(omega'(t) + c1)/2*x + rho(t)")));
    assert!(canonical_constraints(&determine(&NdeSpec::generic(), &InfinitesimalAnsatz::generic()).unwrap()).is_err());
}

#[test]
fn nonconstant_k_forces_zero_omega() {
    let spec = NdeSpec::new(Delay::new(1.0))
        .set("k", CoeffDescriptor::parse("t").unwrap())
        .set("b", CoeffDescriptor::int(1))
        .set("c", CoeffDescriptor::int(1))
        .set("d", CoeffDescriptor::int(1));
    let sys = reduce_ansatz(&determine(&spec, &InfinitesimalAnsatz::generic()).unwrap()).unwrap();
    let e = sys.equation("x2r").unwrap();
    assert_eq!(e.residual, p("beta(t)"));
    assert!(e.note.as_deref().unwrap().contains("forces"));
    assert!(omega_forced_zero(&spec));
}

#[test]
fn zero_k_uses_unsubstituted_term() {
    let spec = NdeSpec::new(Delay::new(1.0)).set("c", CoeffDescriptor::int(-1)).set("d", CoeffDescriptor::int(1));
    let sys = reduce_ansatz(&determine(&spec, &InfinitesimalAnsatz::generic()).unwrap()).unwrap();
    assert!(sys.eliminations[1].contains("x1*x2"));
    assert!(sys.equation("x2r").is_some());
}

#[test]
fn reduced_system_is_complete() {
    // beta constant, gamma = c1/2 and rho solving the homogeneous equation
    // annihilate the reduced residual when b, c, d, k are constant.
    let spec = NdeSpec::new(Delay::new(1.0))
        .set("b", CoeffDescriptor::int(2))
        .set("c", CoeffDescriptor::int(3))
        .set("d", CoeffDescriptor::int(-1))
        .set("k", CoeffDescriptor::closed(Expr::rat(1, 2)));
    let a = InfinitesimalAnsatz::parse("c3", "c1/2*x + rho(t)").unwrap();
    let res = invariance_residual(&spec, &a).unwrap();
    let rel = p("rho''(t) + 2*rho'(t-r) + 3*rho(t) - rho(t-r) + 1/2*rho''(t-r)");
    let v = is_zero(&res, &[Assumption::new("rho", Property::Solves(rel))]);
    assert!(v.zero, "{}", res);
}
