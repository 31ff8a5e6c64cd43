use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the range where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A photon distribution needs more Fock terms than the yield table holds.
    #[error("distribution cutoff {distribution} exceeds yield table cutoff {table}")]
    CutoffMismatch { distribution: usize, table: usize },

    /// Requested photon cutoff is beyond the numeric budget of the optics kernel.
    #[error("photon cutoff {requested} exceeds supported maximum {max}")]
    CutoffTooLarge { requested: usize, max: usize },

    /// A decoy-state estimate could not be formed.
    #[error("decoy estimate: {0}")]
    Decoy(String),

    /// The single-photon pair never yields an announcement.
    #[error("single-photon error rate undefined: zero yield")]
    UndefinedErrorRate,

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Infeasible(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
