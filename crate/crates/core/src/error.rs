use thiserror::Error;

use crate::tensor_ops::InversionMode;

/// Errors raised by the folding library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix under {mode} inversion ({context}); {remedy}")]
    Singular {
        mode: &'static str,
        context: String,
        remedy: &'static str,
    },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eig:e} vs largest {max_eig:e}")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("matrix is not symmetric: asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("degenerate slicing: {0}")]
    DegenerateSlicing(String),

    #[error("slice {slice} has {count} member(s); at least 2 are required")]
    InsufficientSlice { slice: usize, count: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("restart {restart}, iteration {iteration}: {source}")]
    Solver {
        restart: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn singular(mode: &InversionMode, context: impl Into<String>) -> Self {
        let (name, remedy) = match mode {
            InversionMode::Exact => (
                "exact",
                "switch to pseudo inversion or ridge (--inversion ridge --epsilon E)",
            ),
            InversionMode::Pseudo { .. } => ("pseudo", "increase the rank tolerance or use ridge"),
            InversionMode::Ridge { .. } => ("ridge", "increase epsilon"),
        };
        Error::Singular {
            mode: name,
            context: context.into(),
            remedy,
        }
    }

    /// The innermost error, with solver/fold annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Solver { source, .. } | Error::Fold { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.root(), Error::Singular { .. } | Error::NotPsd { .. })
    }
}
