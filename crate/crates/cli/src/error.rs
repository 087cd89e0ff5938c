use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", config_message(*line, msg))]
    Config { line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{stage}: {source}")]
    Numeric {
        stage: String,
        source: fishgame::Error,
    },
}

pub trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for Result<T, fishgame::Error> {
    fn stage(self, stage: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric {
            stage: stage.to_string(),
            source,
        })
    }
}

fn config_message(line: usize, msg: &str) -> String {
    if line == 0 {
        format!("config: {msg}")
    } else {
        format!("config line {line}: {msg}")
    }
}
