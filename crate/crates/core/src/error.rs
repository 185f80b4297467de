use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed delimited input in {context}: {message}")]
    Csv { context: String, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("column `{0}` listed in schema is absent from the header")]
    MissingHeaderColumn(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{column}` has level {found}, expected {expected}")]
    LevelMismatch {
        column: String,
        expected: String,
        found: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("missing id value on row {0}")]
    MissingId(usize),

    #[error("column `{0}` appears in both tables")]
    ColumnCollision(String),

    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("invalid credit record: {0}")]
    Credit(String),

    #[error("cannot score an empty record list")]
    EmptyRecords,

    #[error("need at least {needed} complete pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("correlation {0} lies outside [-1, 1]")]
    CorrelationOutOfRange(f64),

    #[error("ANOVA not defined: {0}")]
    Anova(String),

    #[error("target `{0}` has no non-missing values")]
    TargetAllMissing(String),

    #[error("no usable input variables remain")]
    NoInputs,

    #[error("data is missing variables required by the model: {}", .0.join(", "))]
    SchemaMismatch(Vec<String>),

    #[error(
        "neural network diverged at epoch {epoch} (non-finite loss); try a smaller learning rate"
    )]
    Diverged { epoch: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("empty input vectors")]
    Empty,

    #[error("no candidate models to compare")]
    NoCandidates,

    #[error("candidate {0} has non-finite ASE")]
    NonFiniteAse(String),

    #[error("row {row}: prediction {prediction} is not positive, MAPE denominator undefined")]
    NonPositivePrediction { row: usize, prediction: f64 },

    #[error("no rows with positive actual value to score")]
    NothingToScore,

    #[error("infeasible correlation matrix: {0}")]
    InfeasibleCorrelation(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("model document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(context: impl Into<String>, err: csv::Error) -> Self {
        Error::Csv {
            context: context.into(),
            message: err.to_string(),
        }
    }

    /// True for failures caused by the inputs handed to the tool (paths,
    /// schemas, malformed tables) rather than by a computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv { .. }
                | Error::Schema(_)
                | Error::MissingHeaderColumn(_)
                | Error::UnknownColumn(_)
                | Error::LevelMismatch { .. }
                | Error::DuplicateId(_)
                | Error::MissingId(_)
                | Error::ColumnCollision(_)
                | Error::Credit(_)
                | Error::SchemaMismatch(_)
                | Error::Config { .. }
                | Error::Json(_)
        )
    }
}
