use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("symmetric eigenvalue iteration failed to converge")]
    EigFailed,

    #[error("point is infeasible: {0}")]
    Infeasible(String),

    #[error(
        "oracle certificate {cert:.3e} exceeds configured delta {delta:.3e} at iteration {iteration}"
    )]
    CertificateViolation {
        iteration: usize,
        cert: f64,
        delta: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed instance file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
