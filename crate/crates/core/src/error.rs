use thiserror::Error;

/// Errors shared by the dynamics, solver and propagator layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid phase scale: {0}")]
    InvalidScale(String),

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("caustic divergence: |M_vv| = {mvv_abs:.3e} below threshold {threshold:.3e}")]
    CausticDivergence { mvv_abs: f64, threshold: f64 },

    #[error("no real trajectory satisfies the boundary conditions")]
    NoRealTrajectory,

    #[error("complex root search failed after {iterations} iterations (|residual| = {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("Fock truncation insufficient: tail estimate {tail:.3e} exceeds bound {bound:.3e}")]
    TruncationInsufficient { tail: f64, bound: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary kind {0} is not supported by this operation")]
    UnsupportedBoundary(String),

    #[error("hamiltonian does not support complex phase-space arguments")]
    ComplexUnsupported,
}

pub type Result<T> = std::result::Result<T, Error>;
