use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A norm or measure used as a denominator is too small.
    #[error("degenerate input: {quantity} = {value:e} is below the zero-norm guard")]
    Degenerate { quantity: &'static str, value: f64 },

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Grid geometry cannot hold the requested object.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Propagation produced non-finite amplitudes.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Two algebraically equal routes to the same quantity disagree.
    #[error("inconsistent {what}: {lhs:e} vs {rhs:e}")]
    Inconsistent { what: &'static str, lhs: f64, rhs: f64 },

    /// Guidance velocity requested too close to a node of the wave function.
    #[error("trajectory hit a node of the wave function at x = {x}, t = {t}")]
    Node { x: f64, t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

/// Refuses denominators below [`crate::DEGENERATE_NORM`].
pub(crate) fn guard(quantity: &'static str, value: f64) -> Result<f64> {
    if value < crate::DEGENERATE_NORM || !value.is_finite() {
        Err(Error::Degenerate { quantity, value })
    } else {
        Ok(value)
    }
}

/// Checks that two routes to the same number agree to `tol`.
pub(crate) fn agree(what: &'static str, lhs: f64, rhs: f64, tol: f64) -> Result<()> {
    if (lhs - rhs).abs() <= tol {
        Ok(())
    } else {
        Err(Error::Inconsistent { what, lhs, rhs })
    }
}

/// `line L, column C: message` for a JSON parse error.
pub fn json_location(e: &serde_json::Error) -> String {
    let full = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    let msg = full.strip_suffix(&suffix).unwrap_or(&full);
    format!("line {}, column {}: {msg}", e.line(), e.column())
}
