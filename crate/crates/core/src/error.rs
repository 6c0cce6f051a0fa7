use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("inconsistent rates at m = {index}: relative asymmetry {asymmetry:e}")]
    Consistency { index: usize, asymmetry: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver failed to converge for eigenvalue {index}")]
    Convergence { index: usize },

    #[error("step {dt} exceeds the explicit stability bound {bound}")]
    Stability { dt: f64, bound: f64 },

    #[error("spectral gap {gap:e} is degenerate; truncation too small")]
    DegenerateGap { gap: f64 },

    #[error("cannot seed recurrence for mode {k}: leading entry {value:e}")]
    CannotSeed { k: usize, value: f64 },

    #[error("{capped} of {paths} paths exceeded max level {max_level}")]
    LevelCap { capped: u64, paths: u64, max_level: usize },
}
