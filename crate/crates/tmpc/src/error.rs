use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("replicated share copies disagree")]
    InconsistentShares,
    #[error("peer {0} disconnected")]
    PeerDisconnected(u8),
    #[error("round mismatch: expected {expected}, got {got} from party {from}")]
    RoundMismatch { expected: u32, got: u32, from: u8 },
    #[error("share vector length mismatch")]
    LengthMismatch,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("verification mismatch: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Format(_) => 2,
            Error::Verification(_) => 4,
            _ => 3,
        }
    }
}
