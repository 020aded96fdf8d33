//! Classification and verification of every scenario in one run.

use crate::classify::{classify, CaseId, Generator, GeneratorKind};
use crate::detsys::{invariance_residual, is_zero_with, Assumption, Property, ZeroConfig};
use crate::flowverify::{rho_fn, verify_generator, FlowConfig, VerifyReport};
use crate::nde::NdeSpec;
use crate::ndesolve::{integrate, InitialFunction};
use crate::scenarios::{self, Scenario};
use crate::symexpr::{substitute, Bindings, Expr, JetVar};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorRecord {
    pub label: String,
    pub kind: GeneratorKind,
    pub admitted: bool,
    /// Symbolic invariance; `None` for numeric omega.
    pub symbolic: Option<bool>,
    pub verify: VerifyReport,
}

impl GeneratorRecord {
    pub fn passed(&self) -> bool {
        !self.admitted || (self.symbolic != Some(false) && self.verify.passed())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub expected: Option<CaseId>,
    pub case: Option<CaseId>,
    pub generators: Vec<GeneratorRecord>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    #[serde(skip)]
    pub millis: u128,
}

impl ScenarioReport {
    pub fn case_ok(&self) -> bool {
        self.case == self.expected
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.case_ok() && self.warnings.is_empty() && self.generators.iter().all(|g| g.passed())
    }

    pub fn line(&self) -> String {
        let admitted = self.generators.iter().filter(|g| g.admitted).count();
        let worst_fin = self.generators.iter().filter(|g| g.admitted).map(|g| g.verify.finite).fold(0.0, f64::max);
        format!(
            "{:<4} {:<4} case {:<4} admitted {}  max finite residual {:.2e}  {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.case.map(|c| c.name()).unwrap_or("-"),
            admitted,
            worst_fin,
            self.error.as_deref().unwrap_or("")
        )
    }
}

/// The homogeneous equation written for the atom `rho`.
pub fn rho_relation(spec: &NdeSpec) -> Expr {
    let b = Bindings::new()
        .with(Expr::var(JetVar::X), Expr::coeff("rho"))
        .with(Expr::var(JetVar::X1), Expr::coeff_d("rho", 1))
        .with(Expr::var(JetVar::X2), Expr::coeff_d("rho", 2))
        .with(Expr::var(JetVar::XR), Expr::coeff_r("rho", 0))
        .with(Expr::var(JetVar::X1R), Expr::coeff_r("rho", 1))
        .with(Expr::var(JetVar::X2R), Expr::coeff_r("rho", 2));
    let mut hom = spec.clone();
    hom.h = crate::nde::CoeffDescriptor::zero();
    substitute(&hom.lhs(), &b)
}

/// Symbolic invariance of a closed or parametric generator.
pub fn symbolic_invariance(spec: &NdeSpec, g: &Generator) -> Option<bool> {
    if g.kind == GeneratorKind::Numeric {
        return None;
    }
    let res = invariance_residual(spec, &g.ansatz().ok()?).ok()?;
    let res = spec.exact(&res);
    let cfg = ZeroConfig { params: spec.params(), bank: spec.bank().overlay(&g.bank), ..ZeroConfig::default() };
    let assume = [Assumption::new("rho", Property::Solves(rho_relation(spec)))];
    Some(is_zero_with(&res, &assume, &cfg).zero)
}

pub fn run_scenario(s: &Scenario, cfg: &FlowConfig) -> ScenarioReport {
    let start = Instant::now();
    let mut rep = ScenarioReport {
        name: s.name.to_string(),
        expected: s.expected,
        case: None,
        generators: Vec::new(),
        warnings: Vec::new(),
        error: None,
        millis: 0,
    };
    let body = |rep: &mut ScenarioReport| -> Result<(), String> {
        let cls = classify(&s.spec).map_err(|e| e.to_string())?;
        rep.case = cls.case;
        rep.warnings = cls.warnings.clone();
        let spec = &cls.reduced;
        let theta = InitialFunction::parse(s.theta).map_err(|e| e.to_string())?;
        let t_end = spec.t0 + spec.r.value * cfg.delays as f64;
        let tr = integrate::<f64>(spec, &theta, t_end, cfg.steps_per_delay).map_err(|e| e.to_string())?;
        let rho = rho_fn(spec, s.rho_seed, cfg.delays + 2, cfg.steps_per_delay).map_err(|e| e.to_string())?;
        rep.generators = cls
            .generators
            .par_iter()
            .map(|g| GeneratorRecord {
                label: g.label.clone(),
                kind: g.kind,
                admitted: g.status.admitted(),
                symbolic: symbolic_invariance(spec, g),
                verify: verify_generator(spec, g, &tr, g.is_rho().then(|| rho.clone()), cfg),
            })
            .collect();
        Ok(())
    };
    if let Err(e) = body(&mut rep) {
        rep.error = Some(e);
    }
    rep.millis = start.elapsed().as_millis();
    rep
}

/// Runs the named scenarios (all when `only` is empty), in scenario order.
pub fn run_suite(only: &[String], cfg: &FlowConfig) -> Result<Vec<ScenarioReport>, String> {
    let mut list = Vec::new();
    for name in scenarios::NAMES {
        if only.is_empty() || only.iter().any(|o| o.eq_ignore_ascii_case(name)) {
            list.push(scenarios::scenario(name).unwrap());
        }
    }
    for o in only {
        if !scenarios::NAMES.iter().any(|n| n.eq_ignore_ascii_case(o)) {
            return Err(format!("unknown scenario `{}`", o));
        }
    }
    Ok(list.par_iter().map(|s| run_scenario(s, cfg)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_passes() {
        let reps = run_suite(&[], &FlowConfig::default()).unwrap();
        let mut bad = Vec::new();
        for r in &reps {
            if !r.passed() {
                bad.push(format!("{}\n{:#?}", r.line(), r.generators.iter().filter(|g| !g.passed()).collect::<Vec<_>>()));
            }
        }
        assert!(bad.is_empty(), "{}", bad.join("\n"));
        assert_eq!(reps.len(), 14);
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(run_suite(&["C13".into()], &FlowConfig::default()).is_err());
    }
}
