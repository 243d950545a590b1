use thiserror::Error;

/// Errors raised by the solver and its I/O layer.
#[derive(Debug, Error)]
pub enum FsiError {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("linear solver failed in {context}: {reason}")]
    Solver {
        context: &'static str,
        reason: String,
    },

    #[error("time step failed: {0}")]
    Step(String),

    #[error("step {step} (t = {time:.6e} s) failed: {source}")]
    AtStep {
        step: usize,
        time: f64,
        #[source]
        source: Box<FsiError>,
    },

    #[error("config error on key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = FsiError> = std::result::Result<T, E>;

impl FsiError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        FsiError::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        FsiError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// Checks a strictly positive, finite parameter.
pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(FsiError::param(
            name,
            format!("must be positive, got {value}"),
        ))
    }
}

/// Checks a non-negative, finite parameter.
pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(FsiError::param(
            name,
            format!("must be non-negative, got {value}"),
        ))
    }
}
