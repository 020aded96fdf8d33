//! Prolongation of point-symmetry generators and the extended operator.

use crate::symexpr::{
    diff, diff_wrt, normalize, shift, substitute, Bindings, Expr, ExprError, JetVar, Wrt,
};

fn var(v: JetVar) -> Expr {
    Expr::Var(v)
}

/// Infinitesimals (omega, upsilon) of a generator omega*d/dt + upsilon*d/dx.
#[derive(Debug, Clone, PartialEq)]
pub struct InfinitesimalAnsatz {
    pub omega: Expr,
    pub upsilon: Expr,
    pub free_params: Vec<String>,
}

impl InfinitesimalAnsatz {
    pub fn new(omega: Expr, upsilon: Expr) -> Result<Self, ExprError> {
        for e in [&omega, &upsilon] {
            for v in [JetVar::X1, JetVar::X2, JetVar::XR, JetVar::X1R, JetVar::X2R] {
                if e.contains_var(v) {
                    return Err(ExprError::Invalid(format!("infinitesimal depends on {}", v.name())));
                }
            }
            if e.contains_delayed() {
                return Err(ExprError::Invalid("infinitesimal contains delayed atoms".into()));
            }
        }
        let mut free: Vec<String> = omega.param_names().union(&upsilon.param_names()).cloned().collect();
        free.retain(|p| p != "r");
        Ok(InfinitesimalAnsatz { omega: normalize(&omega), upsilon: normalize(&upsilon), free_params: free })
    }

    pub fn parse(omega: &str, upsilon: &str) -> Result<Self, ExprError> {
        Self::new(crate::symexpr::parse(omega)?, crate::symexpr::parse(upsilon)?)
    }

    /// The generic ansatz omega(t,x), upsilon(t,x).
    pub fn generic() -> Self {
        InfinitesimalAnsatz { omega: Expr::field("omega"), upsilon: Expr::field("upsilon"), free_params: Vec::new() }
    }

    /// omega = beta(t), upsilon = gamma(t) x + rho(t).
    pub fn reduced() -> Self {
        InfinitesimalAnsatz {
            omega: Expr::coeff("beta"),
            upsilon: normalize(&(Expr::coeff("gamma") * Expr::x() + Expr::coeff("rho"))),
            free_params: Vec::new(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut free = self.free_params.clone();
        free.extend(other.free_params.iter().cloned());
        free.sort();
        free.dedup();
        InfinitesimalAnsatz {
            omega: normalize(&(&self.omega + &other.omega)),
            upsilon: normalize(&(&self.upsilon + &other.upsilon)),
            free_params: free,
        }
    }
}

/// Prolonged coefficients, undelayed and delayed.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation {
    pub ups_t: Expr,
    pub ups_tt: Expr,
    pub omega_r: Expr,
    pub upsilon_r: Expr,
    pub ups_t_r: Expr,
    pub ups_tt_r: Expr,
}

/// D_t = d/dt + x' d/dx + x'' d/dx'.
pub fn total_derivative(e: &Expr) -> Result<Expr, ExprError> {
    if e.contains_var(JetVar::X2) {
        return Err(ExprError::Invalid("total derivative of an expression in x'' needs x'''".into()));
    }
    if [JetVar::XR, JetVar::X1R, JetVar::X2R].iter().any(|v| e.contains_var(*v)) {
        return Err(ExprError::Invalid("total derivative of a delayed jet".into()));
    }
    let et = diff(e, JetVar::T)?;
    let ex = diff(e, JetVar::X)?;
    let ep = diff(e, JetVar::X1)?;
    Ok(normalize(&(et + var(JetVar::X1) * ex + var(JetVar::X2) * ep)))
}

fn partials(e: &Expr) -> Result<(Expr, Expr), ExprError> {
    Ok((diff(e, JetVar::T)?, diff(e, JetVar::X)?))
}

/// upsilon_t + (upsilon_x - omega_t) x' - omega_x x'^2.
pub fn prolong_first(a: &InfinitesimalAnsatz) -> Result<Expr, ExprError> {
    let (wt, wx) = partials(&a.omega)?;
    let (ut, ux) = partials(&a.upsilon)?;
    let p = var(JetVar::X1);
    Ok(normalize(&(ut + (ux - wt) * p.clone() - wx * p.pow(2))))
}

/// Five-term expansion of the second prolongation coefficient.
pub fn prolong_second(a: &InfinitesimalAnsatz) -> Result<Expr, ExprError> {
    let (wt, wx) = partials(&a.omega)?;
    let (ut, ux) = partials(&a.upsilon)?;
    let wtt = diff(&wt, JetVar::T)?;
    let wtx = diff(&wt, JetVar::X)?;
    let wxx = diff(&wx, JetVar::X)?;
    let utt = diff(&ut, JetVar::T)?;
    let utx = diff(&ut, JetVar::X)?;
    let uxx = diff(&ux, JetVar::X)?;
    let p = var(JetVar::X1);
    let q = var(JetVar::X2);
    let two = Expr::int(2);
    let three = Expr::int(3);
    Ok(normalize(
        &(utt
            + (two.clone() * utx - wtt) * p.clone()
            + (uxx - two.clone() * wtx) * p.clone().pow(2)
            - wxx * p.clone().pow(3)
            + (ux - two * wt) * q.clone()
            - three * wx * p * q),
    ))
}

/// Same coefficient through the recursive definition D_t(ups_t) - x'' D_t(omega).
pub fn prolong_second_recursive(a: &InfinitesimalAnsatz) -> Result<Expr, ExprError> {
    let first = normalize(&(total_derivative(&a.upsilon)? - var(JetVar::X1) * total_derivative(&a.omega)?));
    Ok(normalize(&(total_derivative(&first)? - var(JetVar::X2) * total_derivative(&a.omega)?)))
}

pub fn prolong_delayed(a: &InfinitesimalAnsatz) -> Result<(Expr, Expr, Expr, Expr), ExprError> {
    Ok((
        shift(&a.omega)?,
        shift(&a.upsilon)?,
        shift(&prolong_first(a)?)?,
        shift(&prolong_second(a)?)?,
    ))
}

pub fn prolong(a: &InfinitesimalAnsatz) -> Result<Prolongation, ExprError> {
    let ups_t = prolong_first(a)?;
    let ups_tt = prolong_second(a)?;
    Ok(Prolongation {
        omega_r: shift(&a.omega)?,
        upsilon_r: shift(&a.upsilon)?,
        ups_t_r: shift(&ups_t)?,
        ups_tt_r: shift(&ups_tt)?,
        ups_t,
        ups_tt,
    })
}

/// The equation written as delta = x'' - F = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationResidual {
    pub delta: Expr,
}

impl EquationResidual {
    pub fn new(delta: Expr) -> Result<Self, ExprError> {
        let r = EquationResidual { delta: normalize(&delta) };
        r.solved()?;
        Ok(r)
    }

    /// F in x'' = F.
    pub fn solved(&self) -> Result<Expr, ExprError> {
        let lead = diff(&self.delta, JetVar::X2)?;
        if lead != Expr::one() {
            return Err(ExprError::Invalid("equation is not of the form x'' - F = 0".into()));
        }
        let f = normalize(&(var(JetVar::X2) - self.delta.clone()));
        if f.contains_var(JetVar::X2) {
            return Err(ExprError::Invalid("equation is not of the form x'' - F = 0".into()));
        }
        Ok(f)
    }
}

/// Extended operator applied to delta, before eliminating x''.
pub fn operator_unsubstituted(a: &InfinitesimalAnsatz, eq: &EquationResidual) -> Result<Expr, ExprError> {
    let f = eq.solved()?;
    let pr = prolong(a)?;
    let f_t = diff_wrt(&f, Wrt::TimeNow)?;
    let f_tr = diff_wrt(&f, Wrt::TimeDelayed)?;
    let f_x = diff(&f, JetVar::X)?;
    let f_xr = diff(&f, JetVar::XR)?;
    let f_p = diff(&f, JetVar::X1)?;
    let f_pr = diff(&f, JetVar::X1R)?;
    let f_qr = diff(&f, JetVar::X2R)?;
    Ok(normalize(
        &(pr.ups_tt
            - a.omega.clone() * f_t
            - pr.omega_r * f_tr
            - a.upsilon.clone() * f_x
            - pr.upsilon_r * f_xr
            - pr.ups_t * f_p
            - pr.ups_t_r * f_pr
            - pr.ups_tt_r * f_qr),
    ))
}

/// Extended operator applied to delta with x'' replaced by F afterwards.
pub fn apply_operator(a: &InfinitesimalAnsatz, eq: &EquationResidual) -> Result<Expr, ExprError> {
    let raw = operator_unsubstituted(a, eq)?;
    let f = eq.solved()?;
    Ok(substitute(&raw, &Bindings::new().with(var(JetVar::X2), f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn p(s: &str) -> Expr {
        normalize(&parse(s).unwrap())
    }

    fn ans(w: &str, u: &str) -> InfinitesimalAnsatz {
        InfinitesimalAnsatz::parse(w, u).unwrap()
    }

    #[test]
    fn total_derivatives() {
        assert_eq!(total_derivative(&p("x")).unwrap(), p("x1"));
        assert_eq!(total_derivative(&p("gamma(t)*x + rho(t)")).unwrap(), p("gamma'(t)*x + rho'(t) + gamma(t)*x1"));
        assert_eq!(total_derivative(&p("t*x1")).unwrap(), p("x1 + t*x2"));
        assert!(total_derivative(&p("x2")).is_err());
    }

    #[test]
    fn first_prolongation() {
        assert_eq!(prolong_first(&ans("t", "x")).unwrap(), Expr::zero());
        assert_eq!(prolong_first(&ans("0", "sin(t)")).unwrap(), p("cos(t)"));
        assert_eq!(
            prolong_first(&InfinitesimalAnsatz::reduced()).unwrap(),
            p("gamma'(t)*x + rho'(t) + (gamma(t) - beta'(t))*x1")
        );
    }

    #[test]
    fn second_prolongation() {
        assert_eq!(prolong_second(&ans("0", "sin(t)")).unwrap(), p("-sin(t)"));
        assert_eq!(prolong_second(&ans("t", "x")).unwrap(), p("-x2"));
        assert_eq!(
            prolong_second(&InfinitesimalAnsatz::reduced()).unwrap(),
            p("gamma''(t)*x + rho''(t) + (2*gamma'(t) - beta''(t))*x1 + (gamma(t) - 2*beta'(t))*x2")
        );
    }

    #[test]
    fn delayed_prolongation() {
        let (_, _, _, utt_r) = prolong_delayed(&ans("0", "sin(t)")).unwrap();
        assert_eq!(utt_r, p("-sin(t - r)"));
        let (_, _, ut_r, _) = prolong_delayed(&InfinitesimalAnsatz::reduced()).unwrap();
        assert_eq!(ut_r, p("gamma'(t-r)*xr + rho'(t-r) + (gamma(t-r) - beta'(t-r))*x1r"));
        let (wr, _, _, _) = prolong_delayed(&ans("t", "x")).unwrap();
        assert_eq!(wr, p("t - r"));
    }

    #[test]
    fn operator_examples() {
        let eq = EquationResidual::new(p("x2 + x2r")).unwrap();
        let res = apply_operator(&ans("0", "sin(t)"), &eq).unwrap();
        assert_eq!(res, p("-sin(t) - sin(t - r)"));
        let pi = crate::symexpr::substitute(&res, &Bindings::new().with(Expr::delay(), Expr::Pi));
        assert!(pi.is_zero_literal());

        let lin = EquationResidual::new(p("x2 + b(t)*x1r + c(t)*x + d(t)*xr + k(t)*x2r")).unwrap();
        assert!(apply_operator(&ans("0", "x"), &lin).unwrap().is_zero_literal());

        let triv = EquationResidual::new(p("x2")).unwrap();
        assert!(apply_operator(&ans("t", "0"), &triv).unwrap().is_zero_literal());
    }

    #[test]
    fn rejects_unsolved_equations() {
        assert!(EquationResidual::new(p("2*x2 + x")).is_err());
        assert!(InfinitesimalAnsatz::parse("x1", "0").is_err());
    }
}
