use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("constraint `{constraint}` references unknown variable index {index}")]
    UnknownVariable { constraint: String, index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model has {0} integral variables; use the MILP solver")]
    WrongSolver(usize),
    #[error("enumeration refused: {count} integral variables (limit {limit})")]
    TooManyIntegers { count: usize, limit: usize },
    #[error("enumeration refused: integral variable `{0}` has an infinite bound")]
    UnboundedInteger(String),
}
