use catebench_core::dataset::DatasetError;
use catebench_core::linreg::OlsError;
use catebench_core::synth::SynthError;
use catebench_core::tlearner::EstimateError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(#[from] DatasetError),
    #[error("scenario error: {0}")]
    Scenario(#[from] SynthError),
    #[error("estimation error: {0}")]
    Estimate(#[from] EstimateError),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("diagnostic not applicable: {0}")]
    Regression(#[from] OlsError),
    #[error("cannot write output: {0}")]
    Output(#[source] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Scenario(_) => 2,
            CliError::Estimate(EstimateError::EmptyArm(_)) => 3,
            CliError::Estimate(EstimateError::EmptyCohort) => 2,
            CliError::Estimate(_) => 1,
            CliError::Consistency(_) => 4,
            CliError::Regression(_) => 5,
            CliError::Output(_) => 1,
        }
    }
}
