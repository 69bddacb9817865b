use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("free variable `{0}` in sentence")]
    FreeVariable(String),

    #[error("set index {0} is not in the index set")]
    UnknownIndex(u32),

    #[error("invalid formula: {0}")]
    InvalidFormula(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("counter `{counter}` refers to `{refers}`, which is not ordered before it")]
    CounterOrder { counter: String, refers: String },

    #[error("line {line}: {msg}")]
    Input { line: usize, msg: String },

    #[error("weight sum overflows 64 bits")]
    WeightOverflow,

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("no tuple satisfies the sentence")]
    Infeasible,

    #[error("cover guarantees sets of size {have}, but the shroud needs {need}")]
    CoverTooWeak { need: usize, have: usize },

    #[error("invalid tree decomposition: {0}")]
    Decomposition(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
