//! Reading and writing datasets, forests and foreign tree exports.

mod dataset_csv;
mod document;
mod node_table;

use std::path::PathBuf;

use thiserror::Error;

use crate::rf::{DatasetError, TreeError};

pub use dataset_csv::{parse_dataset, read_dataset, read_dataset_with};
pub use document::{forest_from_json, forest_to_json, read_forest, write_forest, FORMAT_VERSION};
pub use node_table::{parse_node_table, read_node_table, read_node_tables, NodeTableOptions};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed forest document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("file has no header row")]
    MissingHeader,
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("response column {0:?} cannot also be a covariate")]
    ResponseIsCovariate(String),
    #[error("missing value at row {row}, column {column:?}")]
    MissingValue { row: usize, column: String },
    #[error("non-numeric value {value:?} at row {row}, column {column:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("unsupported format_version {0:?} (expected \"1\")")]
    UnknownVersion(String),
    #[error("tree {tree}, node {node}: covariate {name:?} is not in the covariate list")]
    UnknownCovariate {
        tree: usize,
        node: usize,
        name: String,
    },
    #[error("tree {tree}, node {node}: class {name:?} is not in the class list")]
    UnknownClass {
        tree: usize,
        node: usize,
        name: String,
    },
    #[error("tree {tree}: node ids must run 0..{len} in order, found {found} at position {position}")]
    NodeIdOrder {
        tree: usize,
        len: usize,
        position: usize,
        found: usize,
    },
    #[error("out-of-bag indices must be given for every tree or for none")]
    PartialOob,
    #[error("tree {tree}: {source}")]
    Tree { tree: usize, source: TreeError },
    #[error("node table row {row}: {message}")]
    NodeTable { row: usize, message: String },
}

pub(crate) fn read_text(path: &std::path::Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}
