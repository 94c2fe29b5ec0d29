//! Classification random forests: training, prediction, out-of-bag accuracy,
//! covariate importance and `mtry` tuning.

mod dataset;
mod forest;
mod importance;
mod rng;
mod split;
mod tree;
mod tuning;

use thiserror::Error;

pub use dataset::{Dataset, DatasetError};
pub use forest::{default_mtry, oob_accuracy, train_forest, ForestModel, Prediction, RFConfig};
pub use importance::{
    impurity_importance, permutation_importance, CovariateImportance, ImportanceMetric,
    ImportanceReport,
};
pub use split::{best_split, Split};
pub use tree::{NodeKind, Tree, TreeError, TreeNode};
pub use tuning::{stratified_folds, tune_mtry, TuningResult};

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("training needs at least 2 classes, found {found}")]
    TooFewClasses { found: usize },
    #[error("mtry {mtry} must be between 1 and the covariate count {n_covariates}")]
    MtryOutOfRange { mtry: usize, n_covariates: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} covariates, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dataset classes differ from the forest's classes")]
    ClassMismatch,
    #[error("forest has no out-of-bag indices (ingested forests carry none)")]
    MissingOobIndices,
    #[error("out-of-bag indices do not match this dataset")]
    OobMismatch,
    #[error("no observation is out of bag for any tree")]
    NoOobObservations,
    #[error("invalid folds: {0}")]
    InvalidFolds(String),
}
