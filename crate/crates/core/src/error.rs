use thiserror::Error;

/// Errors surfaced by the library and the `kinesim` binary.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible zone layout: {0}")]
    InfeasibleLayout(String),

    #[error("transmission zone holds {capacity} cells but x = {requested} particles were requested")]
    ZoneCapacity { requested: usize, capacity: usize },

    #[error("incomplete trial data: no records for x in {missing:?}")]
    IncompleteData { missing: Vec<usize> },

    #[error("data integrity violation: {0}")]
    DataIntegrity(String),

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidShape(_)
            | Error::InvalidParameter(_)
            | Error::InfeasibleLayout(_)
            | Error::ZoneCapacity { .. }
            | Error::UnknownFigure(_) => 2,
            Error::IncompleteData { .. } | Error::DataIntegrity(_) => 3,
            Error::Json(e) if e.is_data() || e.is_syntax() => 2,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
