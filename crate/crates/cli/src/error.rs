use jpm_core::analytic::AnalyticError;
use jpm_core::compare::CompareError;
use jpm_core::meanfield::MeanFieldError;
use jpm_core::rate::RateError;
use jpm_core::sweep::SweepError;
use jpm_core::{ParamError, PulseError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or configuration; exit code 2.
    #[error("{0}")]
    Usage(String),

    /// The numerical integration failed; exit code 3.
    #[error("{0}")]
    Integration(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Integration(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<PulseError> for CliError {
    fn from(e: PulseError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MeanFieldError> for CliError {
    fn from(e: MeanFieldError) -> Self {
        match e {
            MeanFieldError::Ode(_) | MeanFieldError::InvariantBreach { .. } => {
                let msg = match e.failure_time() {
                    Some(t) => format!("{e} (failed at t = {t} ns)"),
                    None => e.to_string(),
                };
                CliError::Integration(msg)
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::Ode(_) => CliError::Integration(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::MeanField(m) => m.into(),
            SweepError::Rate(r) => r.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<CompareError> for CliError {
    fn from(e: CompareError) -> Self {
        match e {
            CompareError::MeanField(m) => m.into(),
            CompareError::Rate(r) => r.into(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
