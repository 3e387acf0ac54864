use thiserror::Error;

use crate::poly::PolyError;
use crate::scalar::{ScalarError, SeriesError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("unknown case `{0}` (expected I, IIa, IIb, III or IV)")]
    UnknownCase(String),
    #[error("{family}: missing parameter `{name}`")]
    MissingParameter { family: String, name: String },
    #[error("{family}: unexpected parameter `{name}`")]
    UnexpectedParameter { family: String, name: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pearson pair is not admissible: leading psi coefficient equals n - s for n = {n}")]
    Inadmissible { n: u64 },
    #[error("coherent pair is not admissible: lambda2 + (n-1) lambda3 vanishes at n = {n}")]
    PairInadmissible { n: u64 },
    #[error("{0}: moment seeds are transcendental; use approximate mode")]
    TranscendentalSeeds(String),
    #[error("degenerate functional: {0}")]
    Degenerate(String),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("fixture line {line}: {msg}")]
    Fixture { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
