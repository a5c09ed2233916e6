//! Numerical laboratory for radial boundary blow-up problems of the
//! k-Hessian equation `sigma_k^{1/k}(lambda(D^2 u)) = g(u)` on balls.
//!
//! The crate classifies nonlinearities by the generalized Keller-Osserman
//! integral, integrates the radial initial-value problem with blow-up
//! detection and certified radius brackets, verifies the trajectory
//! estimates that drive the theory, and solves finite-datum Dirichlet
//! problems by shooting and by monotone sub/supersolution iteration.
//!
//! Module map:
//! - [`nonlinearity`]: the source term g, its antiderivative G, and the
//!   Keller-Osserman classification machinery.
//! - [`hessian`]: elementary symmetric polynomials of Hessian eigenvalues,
//!   the radial closed form, admissibility, Maclaurin's inequality.
//! - [`ivp`]: adaptive integration of the radial equation, blow-up radius
//!   bracketing, energy identities.
//! - [`estimates`]: numerical verification of the quantitative trajectory
//!   inequalities.
//! - [`dirichlet`]: sub/supersolutions, shooting and monotone-iteration
//!   solvers, and the boundary-datum-to-infinity construction.

pub mod dirichlet;
pub mod error;
pub mod estimates;
mod gridq;
pub mod hessian;
pub mod ivp;
pub mod nonlinearity;
pub mod quad;

pub use error::{Error, Result};
pub use hessian::{BallSpec, ProblemSpec};
pub use ivp::{BlowupEstimate, BlowupOptions, BlowupVerdict, RadialTrajectory, StepControls};
pub use nonlinearity::{KoClass, KoOptions, KoReport, KoVerdict, Nonlinearity};
