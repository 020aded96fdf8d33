//! Lie point symmetries of second-order linear neutral differential equations
//! with one constant delay.

pub mod classify;
pub mod detsys;
pub mod flowverify;
pub mod funcs;
pub mod nde;
pub mod ndesolve;
pub mod prolong;
pub mod scalar;
pub mod scenarios;
pub mod suite;
pub mod symexpr;

pub use scalar::Real;
pub use symexpr::{Expr, JetVar};

/// Double precision trajectory.
pub type Trajectory = ndesolve::Trajectory<f64>;
/// Double precision evaluation environment.
pub type Env = symexpr::Env<f64>;

/// [`ndesolve::integrate`] in double precision.
pub fn integrate(spec: &nde::NdeSpec, theta: &ndesolve::InitialFunction, t_end: f64, steps: usize) -> Result<Trajectory, ndesolve::SolveError> {
    ndesolve::integrate::<f64>(spec, theta, t_end, steps)
}
