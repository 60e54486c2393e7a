use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration {}: {msg}", path.display())]
    Config { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] mlergm::Error),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for usage and configuration errors, 2 for data errors, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        use mlergm::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Output { .. } => 2,
            CliError::Core(e) => match e {
                E::Numerical(_) => 3,
                E::Config(_)
                | E::Model(_)
                | E::BadThresholds(_)
                | E::MissingAttribute(_)
                | E::DimensionMismatch { .. }
                | E::LayerCount(_) => 1,
                _ => 2,
            },
        }
    }
}
