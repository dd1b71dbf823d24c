use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, GemError>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GemError {
    #[error("input is empty: {0}")]
    Empty(&'static str),
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateVariableName(String),
    #[error("non-numeric value `{value}` at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("column `{0}` has no observed values to impute from")]
    NothingToImpute(String),
    #[error("value `{value}` is not a declared level of `{variable}`")]
    UnknownLevel { variable: String, value: String },
    #[error("categorical variable `{variable}` needs at least two levels, has {found}")]
    TooFewLevels { variable: String, found: usize },
    #[error("duplicate level `{level}` in `{variable}`")]
    DuplicateLevel { variable: String, level: String },
    #[error("design variable `{variable}` has {found} values, expected {expected}")]
    DesignLength {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error(
        "unmatched samples: {} only in dataset {:?}, {} only in design {:?}",
        only_in_dataset.len(), only_in_dataset, only_in_design.len(), only_in_design
    )]
    UnmatchedSamples {
        only_in_dataset: Vec<String>,
        only_in_design: Vec<String>,
    },
    #[error("dataset and design share no sample ids")]
    NoOverlap,
    #[error("unknown design variable `{0}`")]
    UnknownVariable(String),
    #[error("design variable `{0}` is continuous where a categorical factor is required")]
    ContinuousFactor(String),
    #[error("design variable `{0}` is categorical where a continuous variable is required")]
    CategoricalResponse(String),
    #[error("categorical variable `{0}` has only one observed level")]
    SingleObservedLevel(String),
    #[error("{n} samples cannot support {p} model parameters")]
    NotEnoughSamples { n: usize, p: usize },
    #[error("design columns of `{first}` and `{second}` are exactly aliased")]
    AliasedDesign { first: String, second: String },
    #[error("{context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("requested {requested} components but only {available} are supported")]
    ComponentsExceedRank { requested: usize, available: usize },
    #[error("predictor matrix is identically zero")]
    ZeroPredictors,
    #[error("model has a continuous response and cannot classify")]
    NotAClassifier,
    #[error("need at least {needed} folds, got {found}")]
    TooFewFolds { needed: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no usable cross-validation fold remained")]
    NoUsableFolds,
}

impl GemError {
    pub fn class(&self) -> ErrorClass {
        use GemError::*;
        match self {
            UnknownVariable(_) | ContinuousFactor(_) | CategoricalResponse(_) | InvalidParameter(_)
            | TooFewFolds { .. } => ErrorClass::Config,
            NotEnoughSamples { .. }
            | AliasedDesign { .. }
            | ComponentsExceedRank { .. }
            | ZeroPredictors
            | NoUsableFolds
            | DimensionMismatch { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}
