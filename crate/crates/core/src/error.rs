use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("BDF order k={0} out of the supported range 1..=6")]
    InvalidOrder(usize),

    #[error("fractional order alpha={0} out of range (0, 1]")]
    InvalidAlpha(f64),

    #[error("requested {0} quadrature weights, above the memory budget")]
    WeightBudget(usize),

    #[error("relaxation parameter kappa={0} out of range (0, 1)")]
    InvalidKappa(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("1/h = {0} is not an integer >= 2")]
    InvalidMesh(f64),

    #[error("point mass at ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("shifted system {index} could not be factorized: {reason}")]
    ShiftedSolveFailure { index: usize, reason: String },

    #[error("imaginary residue {0:.3e} above tolerance; plan and right-hand side are inconsistent")]
    ImaginaryResidue(f64),

    #[error("waveform relaxation diverged after {iters} iterations (increment {increment:.3e})")]
    Diverged { iters: usize, increment: f64 },

    #[error("Newton iteration did not converge at time level {0}")]
    NewtonFailure(usize),

    #[error("the iteration error is exactly zero; order cannot be observed")]
    ZeroError,

    #[error("too few error samples above the roundoff floor to estimate a rate")]
    TooFewSamples,

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
