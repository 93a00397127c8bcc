use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path window [{t_min}, {t_max}] with step {dt}: {reason}")]
    InvalidWindow {
        t_min: f64,
        t_max: f64,
        dt: f64,
        reason: &'static str,
    },

    #[error("time {t} outside path window [{t_min}, {t_max}]")]
    OutOfWindow { t: f64, t_min: f64, t_max: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("exponent ladder ordering violated: {0}")]
    LadderOrdering(String),

    #[error(
        "equilibrium condition violated: need min(lambda, sigma) > alpha3 and beta >= 1, \
         got delta = {delta}, alpha3 = {alpha3}, beta = {beta}"
    )]
    EquilibriumCondition { delta: f64, alpha3: f64, beta: f64 },

    #[error("non-finite state at t = {t} (max norm before failure {max_norm})")]
    BlowUp { t: f64, max_norm: f64 },

    #[error("quadrature horizon too short: tail estimate {tail} exceeds 10% of body {body}")]
    HorizonTooShort { tail: f64, body: f64 },

    #[error("reference integrator failed: {0}")]
    OracleFailure(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("in {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed {what}: {reason}")]
    Parse { what: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_cell(self, cell: impl Into<String>) -> Self {
        Error::Cell {
            cell: cell.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through cell context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Cell { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self.root(), Error::BlowUp { .. })
    }
}
