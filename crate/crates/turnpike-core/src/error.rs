//! Error type shared by all solver modules.

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dynamics returned a non-finite value")]
    NonFiniteDynamics,
    #[error("derivative evaluation returned a non-finite value")]
    NonFiniteDerivative,
    #[error("Hamiltonian is not concave in the free control directions (max eigenvalue {max_eig:.3e})")]
    NonConcaveHamiltonian { max_eig: f64 },
    #[error("Hamiltonian maximization stalled after {iterations} iterations (projected gradient {pg:.3e})")]
    MaximizationStalled { iterations: usize, pg: f64 },
    #[error("KKT Jacobian is singular")]
    SingularKkt,
    #[error("no convergence: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("assumption violated on {matrix}: min eigenvalue {min_eig:.3e}")]
    AssumptionViolated { matrix: &'static str, min_eig: f64 },
    #[error("matrix M is singular")]
    SingularM,
    #[error("invariant subspace basis is numerically degenerate")]
    SubspaceDegenerate,
    #[error("Riccati residual {residual:.3e} exceeds tolerance")]
    RiccatiResidualTooLarge { residual: f64 },
    #[error("M is not hyperbolic: eigenvalue with |Re| = {min_abs_re:.3e}")]
    NotHyperbolic { min_abs_re: f64 },
    #[error("ker(A^T) and ker(B^T) overlap: A A^T + B B^T is singular")]
    KernelOverlap,
    #[error("R formulas disagree: relative mismatch {mismatch:.3e}")]
    FormulaMismatch { mismatch: f64 },
    #[error("R is not positive definite: min eigenvalue {min_eig:.3e}")]
    RNotPositive { min_eig: f64 },
    #[error("extremal integration blew up at t = {t:.6}")]
    IntegrationBlowup { t: f64 },
    #[error("shooting Jacobian is ill-conditioned (estimate {cond:.3e}); try the bidirectional method")]
    IllConditioned { cond: f64 },
    #[error("internal contract violation: {0}")]
    InternalContractViolation(&'static str),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("adjoint recovery inconsistent: y-multiplier deviation {deviation:.3e}")]
    AdjointInconsistent { deviation: f64 },
    #[error("trajectory and steady state use different y-rates")]
    MismatchedSteadyState,
    #[error("decay fit degenerate: {0}")]
    FitDegenerate(&'static str),
    #[error("sweep too small: {0}")]
    InsufficientSweep(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
