use thiserror::Error;

#[derive(Debug, Error)]
pub enum RfsError {
    /// A caller broke a documented precondition (bad width, off-leaf query, bound exceeded).
    #[error("contract violation: {0}")]
    Contract(String),
    /// The simulated quantum state did not behave as the exact algorithm requires.
    #[error("simulation integrity: {0}")]
    SimulationIntegrity(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl RfsError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        RfsError::Contract(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        RfsError::SimulationIntegrity(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            RfsError::Io(_) => 2,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for RfsError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            RfsError::Io(e.into())
        } else {
            RfsError::Serialization(e.to_string())
        }
    }
}

impl From<csv::Error> for RfsError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => RfsError::Io(io),
                other => RfsError::Serialization(format!("{other:?}")),
            }
        } else {
            RfsError::Serialization(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, RfsError>;
