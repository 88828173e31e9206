use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("Sobolev index must be non-negative, got {0}")]
    NegativeSobolevIndex(f64),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {requested} is not representable on the grid; nearest is {nearest}")]
    FrequencyNotRepresentable { requested: f64, nearest: f64 },

    #[error("quadrature node mismatch: expected {expected}, got {got}")]
    NodeMismatch { expected: usize, got: usize },

    #[error("Picard iteration failed at t = {t} after {iterations} iterations (residual {residual:e})")]
    PicardDivergence { t: f64, iterations: usize, residual: f64 },

    #[error("H^s norm {norm:e} crossed the blow-up threshold at t = {t}")]
    BlowupDetected { t: f64, norm: f64 },

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}
