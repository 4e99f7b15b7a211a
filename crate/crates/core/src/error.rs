use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("price {price} is below intrinsic value {intrinsic}")]
    Arbitrage { price: f64, intrinsic: f64 },

    #[error("invalid model parameter `{name}` = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("{below} of {total} paths have integrated variance below the positivity floor {floor:e}")]
    PositivityFloor { below: usize, total: usize, floor: f64 },

    #[error("requested {requested} series terms but the moment table holds only {available}")]
    InsufficientMoments { requested: usize, available: usize },

    #[error("market maturity {market} does not match moment table maturity {table}")]
    MaturityMismatch { market: f64, table: f64 },

    #[error("truncation criterion not met up to n = {n_max} (last difference {last_error:e})")]
    NonConvergence { n_max: usize, last_error: f64 },

    #[error("stale moment table: stored fingerprint {stored}, requested {requested}")]
    StaleCache { stored: String, requested: String },

    #[error("moment table parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("moment table validation failed: {0}")]
    Validation(String),

    #[error("path batch is missing {0}")]
    MissingData(&'static str),

    #[error("degenerate control variate {0}: zero sample variance")]
    DegenerateControlVariate(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the command-line front end: 2 for usage and
    /// configuration problems, 1 for numerical or runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidSimConfig(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
