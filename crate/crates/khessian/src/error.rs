//! Error types shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the solvers and classifiers.
///
/// Domain errors flag inputs that violate a documented precondition;
/// numerical errors flag computations that ran out of budget or failed to
/// converge and usually carry the best partial answer found.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{name} must be non-negative, got {value}")]
    NegativeInput { name: &'static str, value: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Hessian order k = {k} out of range for dimension N = {n}")]
    OrderOutOfRange { k: usize, n: usize },

    #[error("eigenvalue profile has length {got}, expected N = {expected}")]
    ProfileLength { got: usize, expected: usize },

    #[error("profile is not {k}-admissible: sigma_{j} <= 0")]
    NotAdmissible { k: usize, j: usize },

    #[error("inconsistent radial profile: phi'(0) = {phi1} must vanish at r = 0")]
    InconsistentProfile { phi1: f64 },

    #[error("degenerate slope: xi'({r}) = 0 with k > 1; start from the series expansion")]
    DegenerateSlope { r: f64 },

    #[error("constant nonlinearity is a test-only kind, excluded from KO classification")]
    ConstantKindExcluded,

    #[error("tabulated nonlinearity queried at u = {u} outside its table (extrapolation forbidden)")]
    TableRange { u: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("quadrature budget exceeded: partial value {partial}, error bound {error_bound}")]
    QuadratureBudget { partial: f64, error_bound: f64 },

    #[error("{what} = {value} outside trajectory range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("trajectory too coarse: {got} points, need at least {need}")]
    GridTooCoarse { got: usize, need: usize },

    #[error("profiles live on different grids (first mismatch at index {index})")]
    GridMismatch { index: usize },

    #[error(
        "step underflow while bracketing blow-up: best bracket [{rho_low}, {rho_high}] for beta = {beta}"
    )]
    BracketingFailed {
        beta: f64,
        rho_low: f64,
        rho_high: f64,
    },

    #[error("boundary datum {c} unreachable by shooting on [0, {radius}]")]
    BoundaryUnreachable { c: f64, radius: f64 },

    #[error("no explosive Laplace supersolution: the semilinear majorant fails the KO condition")]
    NoExplosiveSupersolution,

    #[error(
        "blow-up radius not monotone in beta: rho({beta1}) = {rho1} vs rho({beta2}) = {rho2}"
    )]
    NonMonotoneRho {
        beta1: f64,
        rho1: f64,
        beta2: f64,
        rho2: f64,
    },

    #[error("iteration failed to converge within {iterations} iterations (last update {last_update})")]
    NonConvergence {
        iterations: usize,
        last_update: f64,
    },

    #[error("monotone iteration trace violated ordering at iteration {iteration} ({violations} grid points)")]
    MonotonicityViolation {
        iteration: usize,
        violations: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// True for precondition/domain errors (CLI exit code 1), false for
    /// numerical failures (exit code 2). I/O errors are neither (exit 3).
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::NegativeInput { .. }
                | Error::InvalidParameter { .. }
                | Error::OrderOutOfRange { .. }
                | Error::ProfileLength { .. }
                | Error::NotAdmissible { .. }
                | Error::InconsistentProfile { .. }
                | Error::DegenerateSlope { .. }
                | Error::ConstantKindExcluded
                | Error::TableRange { .. }
                | Error::InsufficientData(_)
                | Error::OutOfRange { .. }
                | Error::GridTooCoarse { .. }
                | Error::GridMismatch { .. }
                | Error::Parse(_)
        )
    }
}
