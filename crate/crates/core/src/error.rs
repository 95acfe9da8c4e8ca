use thiserror::Error;

/// Errors produced by channel construction, composition, and the vulnerability engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QifError {
    #[error("parts must sum to n (expected {expected}, got {actual})")]
    PartsSumMismatch { expected: u64, actual: u64 },

    #[error("histogram counts must sum to n on both sides (input {input}, output {output})")]
    CountMismatch { input: u64, output: u64 },

    #[error("probability {p} outside [{lower}, 1]")]
    ProbabilityOutOfRange { p: String, lower: String },

    #[error("epsilon is infinite (p = 1)")]
    InfiniteEpsilon,

    #[error("p = {p} is below uniform 1/{k}")]
    BelowUniform { p: f64, k: u32 },

    #[error("epsilon must be a finite non-negative number, got {0}")]
    InvalidEpsilon(f64),

    #[error("channel with {secrets} secrets exceeds the --cap bound of {cap}")]
    CapExceeded { secrets: u128, cap: u64 },

    #[error("dense channel of {rows}x{cols} cells exceeds the cell limit of {limit}")]
    CellLimitExceeded { rows: u128, cols: u128, limit: u128 },

    #[error("oracle bound exceeded: {secrets} secrets > {bound}")]
    OracleBoundExceeded { secrets: u128, bound: u64 },

    #[error("cascade: inner dimensions/labels differ ({left_cols} output labels vs {right_rows} input labels)")]
    CascadeMismatch { left_cols: usize, right_rows: usize },

    #[error("channels have different secret labels")]
    RowLabelMismatch,

    #[error("prior, gain function and channel are indexed by different secrets")]
    IndexMismatch,

    #[error("gain function has no actions")]
    EmptyActions,

    #[error("multiplicative leakage undefined: prior vulnerability is zero")]
    ZeroPriorVulnerability,

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, QifError>;
