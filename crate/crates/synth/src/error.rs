use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unusable clip: {0}")]
    UnusableClip(String),

    #[error("clip {index}: {source}")]
    Clip {
        index: usize,
        #[source]
        source: Box<SynthError>,
    },

    #[error(transparent)]
    Geom(#[from] strata_geom::GeomError),

    #[error(transparent)]
    Video(#[from] strata_video::VideoError),

    #[error("image: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SynthError>;
