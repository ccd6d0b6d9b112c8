use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need {need} seed points, got {got}")]
    NotEnoughSeeds { need: usize, got: usize },

    #[error("cluster index {index} out of range for k = {k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    #[error("invalid inference parameters: {0}")]
    InvalidInferenceParams(String),

    #[error("neighbor count {needed} exceeds cluster count {k}")]
    InsufficientClusters { needed: usize, k: usize },

    #[error("invalid data spec: {0}")]
    InvalidSpec(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("duplicate site at index {0}")]
    DuplicateSite(usize),

    #[error("degenerate bounding box on axis {0}")]
    DegenerateBox(usize),

    #[error("point lies outside the bounding box")]
    OutsideBox,

    #[error("cell {0} has zero estimated volume")]
    ZeroVolumeCell(usize),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
