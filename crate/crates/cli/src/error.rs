use hopls::eval::EvalError;
use hopls::RegressionError;
use hopls::TensorError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Write(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Shape(_) => 4,
            CliError::Numerical(_) => 5,
            CliError::Write(_) => 6,
        }
    }
}

impl From<TensorError> for CliError {
    fn from(e: TensorError) -> Self {
        match e {
            TensorError::NonFinite(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Shape(e.to_string()),
        }
    }
}

impl From<RegressionError> for CliError {
    fn from(e: RegressionError) -> Self {
        match e {
            RegressionError::Shape(_) | RegressionError::Config(_) => CliError::Shape(e.to_string()),
            RegressionError::Tensor(t) => t.into(),
            RegressionError::NoSharedVariance | RegressionError::ZeroResponse | RegressionError::Decomp(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Regression(r) => r.into(),
            EvalError::Tensor(t) => t.into(),
            EvalError::ZeroTruth | EvalError::Decomp(_) => CliError::Numerical(e.to_string()),
            EvalError::Shape(_) | EvalError::TooFewSamples { .. } | EvalError::InvalidSpec(_) => {
                CliError::Shape(e.to_string())
            }
        }
    }
}
