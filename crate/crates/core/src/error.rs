use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix {0} is singular; not an HNN datum of the required form")]
    SingularMatrix(&'static str),
    #[error("phi * m1 does not equal m2")]
    ConjugacyMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown letter {letter:?} at position {position}")]
    UnknownLetter { letter: String, position: usize },
    #[error("word length exceeds the search budget of {budget}")]
    NotWithinBudget { budget: usize },
    #[error("enumeration exceeded the cap of {cap} elements")]
    BudgetExceeded { cap: usize },
    #[error("operation requires a presentation of the form BS(1,q)")]
    UnsupportedPresentation,
    #[error("point lies outside the tree ball")]
    OutsideBall,
    #[error("point lies outside the grid window")]
    OutsideWindow,
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("fibre mismatch: c = {c}, b = {b}")]
    FibreMismatch { c: f64, b: f64 },
    #[error("ascending ray leaves the tree ball")]
    PathEscapesWindow,
    #[error("insufficient distance range: {0}")]
    InsufficientRange(String),
    #[error("no valid lower envelope: every image distance is zero")]
    NoValidEnvelope,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
