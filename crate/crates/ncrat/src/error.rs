use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field mismatch in {0}")]
    FieldMismatch(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("variable x{index} out of range (1..={nvars})")]
    VarOutOfRange { index: usize, nvars: usize },

    #[error("matrix is not self-adjoint (deviation {deviation:.3e})")]
    NotSelfAdjoint { deviation: f64 },

    #[error("restriction basis is rank deficient")]
    RankDeficient,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("no scalar center found after {attempts} attempts")]
    NoCenter { attempts: usize },

    #[error("sub-expression `{0}` is undefined at the chosen center")]
    UndefinedAtCenter(String),

    #[error("degenerate expression: {0}")]
    Degenerate(String),

    #[error("pencil is ill-conditioned at the center (cond {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("inconsistent equality system")]
    Infeasible,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid json: {0}")]
    Json(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
