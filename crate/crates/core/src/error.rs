use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {dim} exceeds the supported maximum of {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("matrix is not Hermitian (relative deviation {0:e})")]
    NotHermitian(f64),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("impossible sequence {sequence:?} (probability {probability:e})")]
    ImpossibleSequence { sequence: String, probability: f64 },

    #[error("enumerating {count} sequences exceeds the cap of {cap}")]
    EnumerationCap { count: String, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training set contains a single class")]
    SingleClass,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn impossible(sequence: &[usize], probability: f64) -> Self {
        let sequence = sequence.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("");
        Error::ImpossibleSequence { sequence, probability }
    }
}
