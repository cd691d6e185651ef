use thiserror::Error;

/// Failures raised by the orbit engines and the estimators built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A fixed-point doubling orbit ran out of significant bits.
    #[error("orbit budget exhausted after {steps} steps (limit {limit})")]
    BudgetExhausted { steps: u64, limit: u64 },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    /// The point representation cannot be iterated by the requested map.
    #[error("engine mismatch: {0}")]
    UnsupportedEngine(String),

    #[error("invalid ladder: {0}")]
    InvalidLadder(String),

    /// Too few rungs carry a usable (non-zero, well sampled) measure estimate.
    #[error("degenerate ladder: {usable} usable rungs, at least {needed} required")]
    DegenerateLadder { usable: usize, needed: usize },

    #[error("every rung of the ladder was censored")]
    AllCensored,

    #[error("invalid beta {beta}: need 0 < beta < 1/d_upper = {limit}")]
    InvalidBeta { beta: f64, limit: f64 },

    #[error("degenerate decay fit: {usable} lags above the noise floor, at least 6 required")]
    DegenerateFit { usable: usize },

    #[error("no decay envelope available (fit was inconclusive)")]
    NoDecayFit,

    #[error("rejection sampling stalled: acceptance rate {rate:e} after {attempts} attempts")]
    RejectionStall { rate: f64, attempts: u64 },

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
