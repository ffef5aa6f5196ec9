use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval bound is NaN")]
    NanBound,
    #[error("invalid interval bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("cannot split the empty interval")]
    SplitEmpty,
    #[error("cannot split a degenerate interval at {0}")]
    SplitDegenerate(f64),
    #[error("malformed interval `{0}`")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` has no domain")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: `{symbol}` takes {expected} argument(s), found {found}")]
    Arity {
        line: usize,
        col: usize,
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("{line}:{col}: unknown function symbol `{name}`")]
    UnknownSymbol { line: usize, col: usize, name: String },
    #[error("{line}:{col}: only the exponent 2 is supported")]
    Exponent { line: usize, col: usize },
    #[error("{line}:{col}: variable `{name}` is declared twice")]
    DuplicateDeclaration { line: usize, col: usize, name: String },
    #[error("{line}:{col}: empty domain for `{name}`")]
    EmptyDomain { line: usize, col: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagateError {
    #[error("starting domains are not a fixpoint: constraint {0} still narrows them")]
    NotFixpoint(usize),
    #[error("replacement domain {shrunk} is not a proper subset of {current}")]
    NotProperSubset { current: String, shrunk: String },
    #[error("unknown variable id {0}")]
    UnknownVar(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("no variable is wider than the minimum width")]
    NothingToSplit,
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
