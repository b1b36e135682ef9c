use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("image is {width}x{height}, both sides must be at least {min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("image data has {got} samples, expected {expected}")]
    DataLength { expected: usize, got: usize },
    #[error("intensity {value} at index {index} is not a finite value in [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },
    #[error("no gradient structure: every gradient magnitude is zero")]
    NoGradientStructure,
    #[error("quadrature did not converge at z = {z}")]
    QuadratureFailed { z: f64 },
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("a junction needs at least 2 branches, got {0}")]
    TooFewBranches(usize),
    #[error("no radius passes the meaningfulness test: branch rejected")]
    BranchRejected,
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("patch overlap {valid} of {total} samples is below the required fraction")]
    InsufficientOverlap { valid: usize, total: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scene shape does not fit the canvas: {0}")]
    OutOfCanvas(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
