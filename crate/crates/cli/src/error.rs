use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dilation_lab::Error),

    #[error("unknown gallery id `{0}` (try `lab example --list`)")]
    UnknownId(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("no prior run: {0} not found")]
    NoPriorRun(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("io: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
