use thiserror::Error;

pub type Result<T, E = CsbmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CsbmError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: time {time} outside play limit [0, 24]")]
    TimeOutOfRange { line: u64, time: f64 },

    #[error("line {line}: unknown event token `{token}`")]
    UnknownToken { line: u64, token: String },

    #[error("line {line}: {role} `{player}` is not in the on-court set")]
    NotOnCourt { line: u64, role: &'static str, player: String },

    #[error("play {play}: {message}")]
    InconsistentPlay { play: String, message: String },

    #[error("time {0} outside spline domain")]
    OutOfDomain(f64),

    #[error("invalid interval ({0}, {1})")]
    InvalidInterval(f64, f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("event reference {0} is not in the statistics")]
    UnknownEvent(String),

    #[error("Lagrange multiplier root not bracketed for cluster {cluster}: {reason}")]
    RootNotBracketed { cluster: usize, reason: String },

    #[error("infeasible model/data combination: {0}")]
    Infeasible(String),

    #[error("instance too large for exhaustive enumeration: {0} labelings")]
    TooLarge(f64),

    #[error("no eligible receiver in cluster {cluster} for the initial draw")]
    NoEligibleReceiver { cluster: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
