use thiserror::Error;

/// Errors produced by the solver, calibration and I/O layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("degenerate policy: {0}")]
    DegeneratePolicy(String),

    /// Threshold classification and the regime solvers disagree, or a solved
    /// equilibrium failed its residual checks. Always a bug, never user error.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("root not bracketed on [{lo}, {hi}] ({context})")]
    NoBracket {
        lo: f64,
        hi: f64,
        context: &'static str,
    },

    #[error("target {target} = {value} is infeasible; supremum is {supremum}")]
    InfeasibleTarget {
        target: &'static str,
        value: f64,
        supremum: f64,
    },

    #[error("row {row} ({period}): {source}")]
    Row {
        row: usize,
        period: String,
        #[source]
        source: Box<Error>,
    },

    #[error("regression input: {0}")]
    Regression(String),

    #[error("singular regression design: {0}")]
    Singular(String),

    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True when the error signals a solver bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::Inconsistency(_) => true,
            Error::Row { source, .. } => source.is_internal(),
            _ => false,
        }
    }

    pub(crate) fn at_row(self, row: usize, period: &str) -> Error {
        Error::Row {
            row,
            period: period.to_string(),
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
