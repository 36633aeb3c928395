use thiserror::Error;

use crate::bell::BellKind;
use crate::statevec::QubitId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit {0} appears more than once")]
    DuplicateQubit(QubitId),
    #[error("qubit {0} is present in both operands")]
    QubitCollision(QubitId),
    #[error("operands live on different qubit sets: {left:?} vs {right:?}")]
    QubitSetMismatch {
        left: Vec<QubitId>,
        right: Vec<QubitId>,
    },
    #[error("qubit {0} is not part of the state")]
    MissingQubit(QubitId),
    #[error("qubit ids must be positive")]
    InvalidQubitId,
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(u8),
    #[error("expected {expected} amplitudes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("amplitudes are not finite")]
    NonFinite,
    #[error("squared norm {norm_sqr} is outside the normalization tolerance")]
    NotNormalized { norm_sqr: f64 },
    #[error("matrix is not unitary (max |UU† - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("outcome {kind} has probability {probability:e}, below the collapse threshold")]
    ZeroProbabilityOutcome { kind: BellKind, probability: f64 },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("expected a state on {expected} qubits, got {got}")]
    ArityError { expected: usize, got: usize },
    #[error("transfer matrix does not factor into signed Pauli operators: {0}")]
    FactorizationFailure(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("session aborted: {0}")]
    SessionAborted(String),
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
