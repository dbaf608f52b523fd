use thiserror::Error;

/// Errors raised by the engine.
///
/// The variants map onto the CLI exit-code contract: configuration problems
/// exit with 2, numeric domain problems with 3, and failures of
/// invertibility (non-elliptic or singular symbols) with 4.
#[derive(Debug, Error)]
pub enum PdzError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {what} ({requested} > cap {cap})")]
    Resource {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("non-finite value at k={k:?}, x={x:?}")]
    NonFinite { k: Vec<i64>, x: Vec<f64> },

    #[error("symbol is not elliptic: |sigma| = {value:e} at k={k:?}, x={x:?}")]
    NotElliptic { k: Vec<i64>, x: Vec<f64>, value: f64 },

    #[error("singular symbol: |sigma| = {value:e} at node {node:?} (x={x:?})")]
    SingularSymbol {
        node: Vec<usize>,
        x: Vec<f64>,
        value: f64,
    },

    #[error("symbol depends on k (row deviation {deviation:e}); use solve_elliptic")]
    KDependent { deviation: f64 },

    #[error("iteration diverged after {} steps; residual history {history:?}", history.len())]
    Divergence { history: Vec<f64> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PdzError {
    pub fn domain(msg: impl Into<String>) -> Self {
        PdzError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, PdzError>;
