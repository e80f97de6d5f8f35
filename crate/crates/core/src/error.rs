use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or input value is outside its valid domain.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("no start converged ({failed} of {total} starts failed)")]
    NoConvergence { failed: usize, total: usize },

    #[error("sweep failed at parameter value {param}: {source}")]
    SweepFailed {
        param: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("point is not an equilibrium (residual {residual:e})")]
    NotEquilibrium { residual: f64 },

    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter { .. } => true,
            Error::SweepFailed { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite, got {value}"),
        ))
    }
}

pub(crate) fn ensure_non_negative(field: &'static str, value: f64) -> Result<()> {
    ensure_finite(field, value)?;
    if value < 0.0 {
        return Err(Error::invalid(field, format!("must be >= 0, got {value}")));
    }
    Ok(())
}
