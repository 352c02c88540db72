use std::fmt;

/// Why a candidate list of operators is not a valid POVM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PovmDefect {
    Empty,
    NotHermitian,
    NotPsd,
    NotComplete,
}

impl PovmDefect {
    pub fn as_str(self) -> &'static str {
        match self {
            PovmDefect::Empty => "empty",
            PovmDefect::NotHermitian => "not-hermitian",
            PovmDefect::NotPsd => "not-psd",
            PovmDefect::NotComplete => "not-complete",
        }
    }
}

impl fmt::Display for PovmDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("operator is not Hermitian (max deviation {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },

    #[error("invalid POVM ({reason}){}: deviation {deviation:e}", outcome.map(|i| format!(" at outcome {i}")).unwrap_or_default())]
    InvalidPovm {
        reason: PovmDefect,
        outcome: Option<usize>,
        deviation: f64,
    },

    #[error("invalid Kraus channel: completeness deviation {deviation:e}")]
    InvalidChannel { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
}

impl Error {
    pub(crate) fn invalid_povm(reason: PovmDefect, outcome: Option<usize>, deviation: f64) -> Self {
        Error::InvalidPovm {
            reason,
            outcome,
            deviation,
        }
    }

    pub(crate) fn dim(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
