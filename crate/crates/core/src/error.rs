use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("wave speed bound {bound} is below the local characteristic speed {speed}")]
    WaveSpeedTooSmall { bound: f64, speed: f64 },
    #[error("invalid endpoint states: {0}")]
    InvalidEndpoints(String),
    #[error("degenerate case (u_plus = 0) has no exponential rate")]
    DegenerateCase,
    #[error("stationary orbit could not be bracketed: {0}")]
    BisectionFailed(String),
    #[error("f'(v) vanished at x = {x} with v = {v} away from the far state")]
    SingularDerivative { x: f64, v: f64 },
    #[error("domain too short: residual |ubar(lx) - u_plus| = {residual:e}")]
    TruncationTooShort { residual: f64 },
    #[error("fit window is empty")]
    WindowEmpty,
    #[error("non-positive value {value} at sample {index}")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("grid is not fully periodic")]
    NonPeriodicGrid,
    #[error("dense oracle limited to nx*ny <= {limit}, got {size}")]
    GridTooLarge { size: usize, limit: usize },
    #[error("initial data reaches u >= 0 at ({x}, {y}) inside the boundary layer")]
    AmplitudeTooLarge { x: f64, y: f64 },
    #[error("non-finite value detected at t = {t}")]
    NaNDetected { t: f64 },
    #[error("time step {dt} exceeds the CFL bound {limit}")]
    TimeStepTooLarge { dt: f64, limit: f64 },
    #[error("field is {value:e} at the far edge; truncated norms are invalid")]
    FarFieldNotDecayed { value: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad checkpoint magic")]
    BadMagic,
    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("checkpoint truncated: expected {expected} bytes of field data, found {found}")]
    TruncatedFile { expected: usize, found: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
