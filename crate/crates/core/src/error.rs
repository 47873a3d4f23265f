use thiserror::Error;

use crate::polytope::Diagnosis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("predicate `{name}` used with arity {found}, expected {expected}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown constant `{0}`")]
    UnknownConstant(String),

    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("formula is not closed; free variables: {0}")]
    NotClosed(String),

    #[error("formula must be constant-free but mentions `{0}`")]
    NotConstantFree(String),

    #[error("formula must be of the form `forall V1, ..., Vn: <quantifier-free body>`")]
    NotUniversal,

    #[error("variable `{0}` is bound twice on one path")]
    Rebound(String),

    #[error("width {k} exceeds domain size {n}")]
    WidthTooLarge { k: usize, n: usize },

    #[error("formula has {vars} variables but the domain has only {n} constants")]
    TooManyVariables { vars: usize, n: usize },

    #[error("width {width} exceeds the exhaustive cap {cap}")]
    WidthCap { width: usize, cap: usize },

    #[error("properness check needs {atoms} distinct atoms, above the truth-table cap {cap}")]
    PropernessCap { atoms: usize, cap: usize },

    #[error("constant subset is not contained in the example's constants")]
    NotSubset,

    #[error("duplicate constant `{0}`")]
    DuplicateConstant(String),

    #[error("{atoms} ground atoms exceed the enumeration cap of {cap}")]
    CapExceeded { atoms: usize, cap: usize },

    #[error("world space is empty: no world satisfies the hard rules")]
    EmptyWorldSpace,

    #[error("world is not a member of the world space: {0}")]
    ForeignWorld(String),

    #[error("marginals are not realizable: {0}")]
    NotRealizable(Box<Diagnosis>),

    #[error("constraint set is infeasible (residual {residual:.3e} after feasibility phase)")]
    Infeasible { residual: f64 },

    #[error("expansion level {level} is below the admissible minimum {min}")]
    LevelTooLow { level: usize, min: usize },

    #[error("target size {size} is outside the admissible range [{min}, {max}]")]
    SizeOutOfRange { size: usize, min: usize, max: usize },

    #[error("hard rule #{index} (`{rule}`) is violated")]
    HardRuleViolated { index: usize, rule: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    /// Shift a syntax error that was produced for a single line of a larger file.
    pub(crate) fn at_line(self, line: usize, column_offset: usize) -> Self {
        match self {
            Error::Syntax {
                line: inner,
                column,
                message,
            } => Error::Syntax {
                line: line + inner - 1,
                column: if inner == 1 {
                    column + column_offset
                } else {
                    column
                },
                message,
            },
            other => other,
        }
    }
}
