use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("singular response: lossless mode driven exactly on resonance")]
    Singular,

    #[error("dressed-mode branch assignment is ambiguous (equal hybridization)")]
    AmbiguousBranch,

    #[error("no peak found in window")]
    NoPeak,

    #[error("multiple peaks found in window")]
    MultiplePeaks,

    #[error("half-maximum crossing lies outside the window")]
    WindowTooNarrow,

    #[error("parameters `{first}` and `{second}` cannot be resolved independently")]
    DegenerateParameters {
        first: &'static str,
        second: &'static str,
    },

    #[error("no solution: {0}")]
    NoSolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
