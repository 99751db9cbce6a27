use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes:
/// config/schema problems -> 2, numerical failures -> 3, resource limits -> 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("generator index {0} out of range 1..=10")]
    GeneratorIndex(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular mixing-angle factorization: |cos\u{3b8} - i(\u{3b8}4/\u{3b8}) sin\u{3b8}| = {modulus:.3e}")]
    SingularFactorization { modulus: f64 },

    #[error("matrix is not symplectic: residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    NotSymplectic { residual: f64, tol: f64 },

    #[error("Bogolyubov constraints violated: max residual {residual:.3e} exceeds {tol:.1e}")]
    ConstraintViolation { residual: f64, tol: f64 },

    #[error("integration failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("resource limit: {message}")]
    Resource {
        message: String,
        suggested_cutoff: Option<usize>,
    },

    #[error("numerically singular: {0}")]
    NumericalRank(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Resource { .. } => 4,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}
