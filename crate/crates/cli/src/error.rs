use std::path::Path;

use thiserror::Error;

/// Failures surfaced by the command-line front end, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{source_name}: line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("missing required setting `{key}` (config key `{key}` or flag --{flag})")]
    MissingKey { key: &'static str, flag: &'static str },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Fold(#[from] foldkit::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical singularity, 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::MissingKey { .. } | CliError::Input(_) => 2,
            CliError::Fold(e) if e.is_singular() => 3,
            CliError::Fold(_) => 2,
            CliError::Io { .. } => 4,
        }
    }
}

/// 1-based line and column of byte `offset` in `text`.
pub fn line_column(text: &str, offset: usize) -> (u64, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() as u64 + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
