use thiserror::Error;

/// Errors produced by the CoMET toolkit.
#[derive(Debug, Error)]
pub enum CometError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "no valid code set: placed {placed} of {requested} channels at length {length} \
         ({requested} codes need {needed} distinct nonzero indexes, {available} exist)"
    )]
    NoValidCodeSet {
        placed: usize,
        requested: usize,
        length: usize,
        needed: usize,
        available: usize,
    },

    #[error("solver failed: relative residual {residual:.3e} exceeds {tolerance:.3e}")]
    SolverFailed { residual: f64, tolerance: f64 },

    #[error("infeasible target amplitude {target} (max realizable {max})")]
    InfeasibleTarget { target: f64, max: f64 },

    #[error("backend failure at chip {chip}: {message}")]
    Backend { chip: usize, message: String },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CometError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CometError {
    CometError::InvalidArgument(msg.into())
}
