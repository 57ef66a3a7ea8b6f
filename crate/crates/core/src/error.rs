use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("Mie series did not converge at n_max = {n_max} (last term / sum = {ratio:.3e})")]
    MieNotConverged { n_max: usize, ratio: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("root finder failed: {0}")]
    RootFinding(String),

    #[error("step too large: dt = {dt} fs exceeds {limit:.4} fs (0.2 / max|B~|)")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
