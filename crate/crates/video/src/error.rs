use thiserror::Error;

#[derive(Debug, Error)]
pub enum VideoError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0}")]
    Parse(String),

    #[error("no human instance designated (id {0} absent from every frame)")]
    NoHumanInstance(u16),

    #[error("masklets do not partition the frame: {0}")]
    Partition(String),

    #[error("image: {0}")]
    Image(String),

    #[error(transparent)]
    Geom(#[from] strata_geom::GeomError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VideoError>;
