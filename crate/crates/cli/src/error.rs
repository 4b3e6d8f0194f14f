use entdist_core::records::RecordError;
use entdist_core::SimError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation error: {0}")]
    Sim(#[from] SimError),
    #[error("cannot write output: {0}")]
    Output(#[from] RecordError),
    #[error("acceptance failed: {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(RecordError::Io(e))
    }
}
