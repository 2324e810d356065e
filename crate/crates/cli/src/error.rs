use std::path::PathBuf;

use thiserror::Error;

/// Failures of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Core(#[from] figkit::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use figkit::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Io { .. } => 3,
            Self::Degenerate(_) => 4,
            Self::Core(e) => match e {
                E::Io { .. } | E::Image(_) => 3,
                E::InvalidParameter(_)
                | E::WrongArity { .. }
                | E::MixedOntologies
                | E::Malformed { .. }
                | E::Json(_)
                | E::Csv(_)
                | E::ImageTooSmall { .. }
                | E::TexelTooSmall { .. }
                | E::UnknownColor { .. }
                | E::ShapeMismatch(_)
                | E::LayoutMismatch { .. }
                | E::InvalidImage(_) => 2,
                E::ZeroVariance
                | E::EmptySet(_)
                | E::NonFinite(_)
                | E::EmptyClass(_)
                | E::ZeroVarianceVector(_)
                | E::TooFewSamples { .. }
                | E::InsufficientPoints { .. }
                | E::Unreachable(_)
                | E::EmptySeries
                | E::Empty(_) => 4,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
