use thiserror::Error;

/// Which application of the Zorich map overflowed in a second iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    First,
    Second,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::First => f.write_str("first"),
            Stage::Second => f.write_str("second"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow in {stage} application: height {height} exceeds {limit}")]
    Overflow { stage: Stage, height: f64, limit: f64 },

    #[error("zero input: |y| = {0:e} has no preimage under the Zorich map")]
    ZeroInput(f64),

    #[error("parity mismatch: y3 = {y3} cannot be reached from beam ({i}, {j})")]
    ParityMismatch { y3: f64, i: i64, j: i64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("no intersection bracketed on parameter range [{lo}, {hi}]")]
    NoIntersection { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::ZeroInput(_) | Error::ParityMismatch { .. } | Error::Invalid(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
