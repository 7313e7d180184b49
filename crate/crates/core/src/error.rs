use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot convert `{from}` ({from_dim}) to `{to}` ({to_dim})")]
    IncompatibleUnits {
        from: String,
        from_dim: String,
        to: String,
        to_dim: String,
    },

    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("cannot parse quantity `{0}`")]
    BadQuantity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid {what}: {}", violations.join("; "))]
    Invalid {
        what: &'static str,
        violations: Vec<String>,
    },

    #[error("fit precondition failed: {0}")]
    FitPrecondition(String),

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("extinction target {target} unreachable: minimum |A| = {achieved:.4} within the maximum pulse area")]
    Unreachable { target: f64, achieved: f64 },

    #[error("simulation budget exceeded: {required} ion-steps required, {allowed} allowed")]
    BudgetExceeded { required: u64, allowed: u64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
