use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("operation requires {expected} price mode, model is {got}")]
    WrongMode { expected: &'static str, got: &'static str },

    #[error("{condition} violated (margin {margin:e})")]
    ConditionViolated { condition: &'static str, margin: f64 },

    #[error("pnl at the upper fee bound {fee:e} is {pnl:e} (std err {std_err:e}); no sign change to bisect")]
    NoSignChange { fee: f64, pnl: f64, std_err: f64 },

    #[error("policy iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("non-finite value at q={q}, price index {price_index}")]
    NonFinite { q: usize, price_index: usize },

    #[error("price column {column} is not a single hold->post switch (post->hold at q={q})")]
    ThresholdViolation { column: usize, q: usize },

    #[error("queue pinned at {queue} after burn-in at fee {fee:e}; regime diverges")]
    Diverging { fee: f64, queue: u64 },

    #[error("only {observed} posting periods observed, need at least {required}")]
    TooFewPeriods { observed: usize, required: usize },

    #[error("batch has {got} periods, controller expects kappa={kappa}")]
    BatchSize { got: usize, kappa: usize },

    #[error("switch matrix is degenerate: both regimes absorbing")]
    DegenerateSwitch,

    #[error("f*={f_star:e} and p*={p_star:e} are within {tol:e}; kappa sweep needs separated fees")]
    NotSeparated { f_star: f64, p_star: f64, tol: f64 },

    #[error("unknown scenario '{0}' (valid: iid-dec, iid-const, ar1-dec, ar1-const)")]
    UnknownScenario(String),

    #[error("config: {0}")]
    Config(String),

    #[error("csv {path}: {msg}")]
    Csv { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParam(msg()))
    }
}
