use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),

    #[error("graph: {0}")]
    Graph(String),

    /// A parse failure with a human-readable locus such as `placemark 3` or `row 17`.
    #[error("{source_name}: {locus}: {message}")]
    Parse {
        source_name: String,
        locus: String,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    /// The model cannot be completed (no supply node, unreachable demand, ...).
    #[error("infeasible model: {0}")]
    Infeasible(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// An error raised inside a named pipeline stage.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, locus: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            locus: locus.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 3 for model infeasibility, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    /// Wraps the error with the name of the stage it came from.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_owned(),
                source: Box::new(e),
            },
        }
    }
}
