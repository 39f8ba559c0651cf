use thiserror::Error;

use crate::VarId;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("directed cycle through variable {0}")]
    Cycle(String),

    #[error("table length mismatch for {what}: expected {expected}, found {found}")]
    TableLength {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate variable id {0}")]
    DuplicateId(VarId),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable {var} has cardinality {left} in one factor and {right} in another")]
    CardinalityConflict { var: VarId, left: usize, right: usize },

    #[error("variable {0} is not in the factor scope")]
    NotInScope(VarId),

    #[error("evidence for `{var}` has length {found}, expected {expected}")]
    EvidenceLength { var: String, expected: usize, found: usize },

    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),

    #[error("formula error: {0}")]
    Formula(String),

    #[error("unbound formula variable `{0}`")]
    UnboundVariable(String),

    #[error("illegal proper difference: right operand is not a subset of the left operand")]
    IllegalDifference,

    #[error("illegal disjunctive union: operands are not disjoint")]
    IllegalUnion,

    #[error("expression for child state {state} does not evaluate to its level set")]
    LevelSetMismatch { state: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{what} exceeds budget: {count} > {limit}")]
    BudgetExceeded { what: String, count: u128, limit: u128 },

    #[error("search budget exhausted before a base of size {size} was proved minimal: {reason}")]
    SearchExhausted {
        reason: String,
        size: usize,
        best: Box<crate::mbh::MbhSolution>,
    },

    #[error("factorization does not reproduce the deterministic potential at y={child_state}, x={config:?}")]
    VerificationFailed { child_state: usize, config: Vec<usize> },

    #[error("function of `{0}` cannot be decomposed into binary associative steps")]
    NotDecomposable(String),

    #[error("evidence has zero probability under the model")]
    ZeroNormalizer,

    #[error("marginal has a negative entry {0} beyond tolerance")]
    NegativeMarginal(f64),

    #[error("invalid elimination order: {0}")]
    InvalidOrder(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    /// Whether the error reports an exhausted resource budget.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. } | Error::SearchExhausted { .. })
    }

    /// Whether the error reports a broken internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::NegativeMarginal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
