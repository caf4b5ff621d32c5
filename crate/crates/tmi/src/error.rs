use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Error, Debug)]
pub enum TmiError {
    #[error("temporal grids do not match: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("envelope has zero norm")]
    ZeroNorm,

    #[error("pulse leaks past the {edge} grid edge (|e|^2 there is {fraction:.3e} of peak)")]
    EdgeLeakage { edge: &'static str, fraction: f64 },

    #[error("boundary leakage {0:.3e} exceeds 1e-6; grid too small for the walk-off")]
    BoundaryLeakage(f64),

    #[error("delay {tau_fs} fs exceeds 25% of the grid span ({span_fs} fs)")]
    DelayTooLarge { tau_fs: f64, span_fs: f64 },

    #[error("calibration target CE = {target} unreachable below the first maximum (best {best:.6})")]
    CalibrationUnreachable { target: f64, best: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("matrix file format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TmiError {
    /// Process exit code associated with this error class.
    /// 2 = config, 3 = numerical guard, 4 = I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            TmiError::Config(_) => 2,
            TmiError::Io(_) | TmiError::Format(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, TmiError>;
