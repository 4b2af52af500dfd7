use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },
    #[error("linear system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("Gram matrix of cell {cell} is singular (condition estimate {condition:.3e})")]
    SingularGram { cell: usize, condition: f64 },
    #[error("reduced Gram matrix W Q W* is singular (condition estimate {condition:.3e})")]
    SingularReducedGram { condition: f64 },
    #[error("no dictionary row increases the combiner rank")]
    DictionaryExhausted,
    #[error("appended row lies in the row space of the current stack")]
    RowDependent,
    #[error("transmit correlation of cell {cell} is singular")]
    SingularB { cell: usize },
    #[error("no dictionary row satisfies the positivity constraint")]
    NoFeasibleRow,
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
