//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("unsupported Sobolev order {0}; supported integer orders are 0..=4")]
    UnsupportedSobolevOrder(u32),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("non-positive time increment {0}")]
    NonPositiveTime(f64),
    #[error("cfl violation: rho*max|b|*dtau/h = {0} > 0.5")]
    CflViolation(f64),
    #[error("substep count {0} below minimum 8")]
    TooFewSubsteps(usize),
    #[error("cutoff under-resolved: epsilon {epsilon} < 4*spacing = {limit}")]
    CutoffUnderResolved { epsilon: f64, limit: f64 },
    #[error("cutoff too wide: epsilon {epsilon} >= box_length/4 = {limit}")]
    CutoffTooWide { epsilon: f64, limit: f64 },
    #[error("kernel evaluation at the origin")]
    KernelAtOrigin,
    #[error("constant {name} = {value} below the unit floor")]
    ConstantBelowFloor { name: &'static str, value: f64 },
    #[error("oracle breakdown: {0}")]
    OracleBreakdown(String),
    #[error("solver blow-up: {0}")]
    BlowUp(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad field file: {0}")]
    BadFieldFile(String),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: 1 for configuration
    /// problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::BadFieldFile(_) => 1,
            _ => 2,
        }
    }
}
