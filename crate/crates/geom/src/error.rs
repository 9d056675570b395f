use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("invalid rig: {0}")]
    InvalidRig(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("pose has {pose} joints, rig has {rig}")]
    JointCountMismatch { pose: usize, rig: usize },

    #[error("non-finite pose parameter at joint {0}")]
    NonFinitePose(usize),

    #[error("{0}")]
    Parse(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GeomError>;
