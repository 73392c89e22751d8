use num_rational::Rational64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("operands belong to different groups")]
    GroupMismatch,

    #[error("invalid psi: {0}")]
    InvalidPsi(String),

    #[error("cocycle construction failed: {0}")]
    Construction(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(Rational64),

    #[error("matrix is not orthogonal (residual {0:e})")]
    NotOrthogonal(f64),

    #[error("elements belong to different dilation contexts")]
    ContextMismatch,

    #[error("time {time} exceeds the horizon {horizon}")]
    BeyondHorizon {
        time: Rational64,
        horizon: Rational64,
    },

    #[error("reversed dilation requires a horizon")]
    MissingHorizon,

    #[error("malformed time pair ({0}, {1})")]
    InvalidTimes(Rational64, Rational64),

    #[error("sampling grid does not refine breakpoint {0}")]
    GridMismatch(Rational64),

    #[error("probe support extends past {0}")]
    ProbeSupport(Rational64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
