use thiserror::Error;

/// Errors from parsing hex words, condition grids, or DIMACS text.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("expected {expected} words, got {got}")]
    WordCount { expected: usize, got: usize },
    #[error("bad hex word {0:?}")]
    BadWord(String),
    #[error("line {line}: {msg}")]
    Grid { line: usize, msg: String },
    #[error("{0}")]
    Other(String),
}

/// Errors from building or solving an instance.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("starting point is for {sp} steps but {requested} were requested")]
    StepMismatch { sp: usize, requested: usize },
    #[error("external clause refers to unknown variable {0}")]
    UnknownVariable(u32),
    #[error("adder column has {0} inputs, limit is 7")]
    TooManyAddends(usize),
    #[error("model decoding failed: {0}")]
    Decode(String),
    #[error("solution failed verification: {0}")]
    Verification(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Parse(#[from] ParseError),
}
