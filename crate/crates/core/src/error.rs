use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no squeeze solution: {0}")]
    NoSqueezeSolution(String),

    #[error("inconsistent drives: {0}")]
    InconsistentDrives(String),

    #[error("invalid Hamiltonian: not Hermitian (max |H - H^dag| = {0:.3e})")]
    InvalidHamiltonian(f64),

    #[error("integrator step size underflow at t = {t} (h = {step:.3e})")]
    Stiffness { t: f64, step: f64 },

    #[error("numerical integrity violated: {0}")]
    Integrity(String),

    #[error("steady state is not unique (null-space dimension {null_dim})")]
    NonUniqueSteadyState { null_dim: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("relaxation fit failed: {reason} (log-residual rms {residual:.3e})")]
    FitFailure { reason: String, residual: f64 },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
