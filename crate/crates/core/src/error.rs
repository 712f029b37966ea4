use thiserror::Error;

/// Errors raised by the geometry, flow and orchestration layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("focal point reached at r = {r} (Jacobi coefficient {coefficient:e})")]
    Focal { r: f64, coefficient: f64 },

    #[error("chart exit at parameter {param}")]
    ChartExit { param: f64 },

    #[error("degenerate immersion at grid point {index}: Gram determinant {det:e}")]
    Degenerate { index: usize, det: f64 },

    #[error("stability bound violated: dt = {dt:e} exceeds {bound:e}")]
    Stability { dt: f64, bound: f64 },

    #[error("insufficient snapshots: need {need}, trace has {have}")]
    InsufficientSnapshots { need: usize, have: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
