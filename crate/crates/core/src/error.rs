use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0}: input is empty")]
    Empty(&'static str),

    #[error("{what}: length mismatch ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{what}: need at least {needed} samples, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("quaternion norm {norm} cannot be normalized")]
    DegenerateQuaternion { norm: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(
        "rank-deficient point configuration (rank {rank} < 2): points are collinear or coincident"
    )]
    RankDeficient { rank: usize },

    #[error("timestamps out of order at frame {frame}: {timestamp} after {previous}")]
    OutOfOrder {
        frame: u64,
        previous: f64,
        timestamp: f64,
    },

    #[error("frame {frame}: missing {field} pose")]
    MissingPose { frame: u64, field: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
