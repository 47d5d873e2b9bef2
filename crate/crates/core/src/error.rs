use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("merge horizon {t_m} s shorter than one step ({dt} s)")]
    DegenerateHorizon { t_m: f64, dt: f64 },

    #[error("position series not strictly increasing at index {index}")]
    NonMonotonePositions { index: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("scenario template rejected: {0}")]
    InvalidTemplate(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("table mismatch: {0}")]
    TableMismatch(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
