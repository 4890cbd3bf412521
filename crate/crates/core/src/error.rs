use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    /// Work whose cost grows exponentially was refused because a size cap was exceeded.
    #[error("{what} = {value} exceeds cap {cap}: {reason}")]
    Cap {
        what: &'static str,
        value: usize,
        cap: usize,
        reason: &'static str,
    },

    #[error("unsupported ansatz: {0}")]
    UnsupportedAnsatz(String),

    #[error("not a critical point: gradient max-norm {0:e} above tolerance")]
    NotCritical(f64),

    #[error("objective or gradient produced a non-finite value")]
    NonFinite,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Cap { .. } => 3,
            Error::NonFinite => 4,
            _ => 2,
        }
    }
}
