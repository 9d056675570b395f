use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schedule: {0}")]
    Schedule(String),

    #[error("shape: {0}")]
    Shape(String),

    #[error("VAE must be frozen before encoding condition codes")]
    VaeNotFrozen,

    #[error("canonical image carries no identity evidence (all transparent)")]
    EmptyCanonical,

    #[error("training diverged: non-finite loss at step {step} (t = {t}, clip `{clip}`)")]
    NonFiniteLoss {
        step: u64,
        t: usize,
        clip: String,
    },

    #[error("VAE pretraining diverged: non-finite loss at step {0}")]
    VaeDiverged(u64),

    #[error(transparent)]
    Core(#[from] strata_core::CoreError),

    #[error(transparent)]
    Geom(#[from] strata_geom::GeomError),

    #[error(transparent)]
    Video(#[from] strata_video::VideoError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;
