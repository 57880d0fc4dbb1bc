use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },

    #[error("{origin}:{line}:{column}: {}{message}", key.as_ref().map(|k| format!("`{k}`: ")).unwrap_or_default())]
    Parse { origin: String, line: usize, column: usize, key: Option<String>, message: String },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] riemflow::Error),
}
