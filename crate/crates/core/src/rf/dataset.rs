use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("dataset has no rows")]
    Empty,
    #[error("row {row} has {found} values, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value at row {row}, covariate {column}")]
    NonFinite { row: usize, column: usize },
    #[error("{rows} rows but {responses} responses")]
    ResponseCount { rows: usize, responses: usize },
    #[error("response {0:?} is not a known class")]
    UnknownClass(String),
    #[error("duplicate covariate name {0:?}")]
    DuplicateCovariate(String),
    #[error("duplicate class name {0:?}")]
    DuplicateClass(String),
}

/// Tabular observations with numeric covariates and a categorical response.
///
/// Values are stored row-major; responses are indices into `class_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariate_names: Vec<String>,
    values: Vec<f64>,
    n_rows: usize,
    responses: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, ordering `class_names` by first appearance in `responses`.
    pub fn new<S: AsRef<str>>(
        covariate_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        responses: &[S],
    ) -> Result<Self, DatasetError> {
        let mut class_names: Vec<String> = Vec::new();
        for r in responses {
            if !class_names.iter().any(|c| c == r.as_ref()) {
                class_names.push(r.as_ref().to_string());
            }
        }
        Self::with_classes(covariate_names, rows, responses, class_names)
    }

    /// Builds a dataset against an explicit, ordered class list.
    pub fn with_classes<S: AsRef<str>>(
        covariate_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        responses: &[S],
        class_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        if rows.len() != responses.len() {
            return Err(DatasetError::ResponseCount {
                rows: rows.len(),
                responses: responses.len(),
            });
        }
        check_unique(&covariate_names, DatasetError::DuplicateCovariate)?;
        check_unique(&class_names, DatasetError::DuplicateClass)?;

        let p = covariate_names.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(DatasetError::Ragged {
                    row: i,
                    expected: p,
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { row: i, column: j });
            }
            values.extend_from_slice(row);
        }

        let lookup: HashMap<&str, usize> = class_names
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let responses = responses
            .iter()
            .map(|r| {
                lookup
                    .get(r.as_ref())
                    .copied()
                    .ok_or_else(|| DatasetError::UnknownClass(r.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            covariate_names,
            values,
            n_rows: rows.len(),
            responses,
            class_names,
        })
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_covariates();
        &self.values[i * p..(i + 1) * p]
    }

    #[inline]
    pub fn value(&self, row: usize, covariate: usize) -> f64 {
        self.values[row * self.n_covariates() + covariate]
    }

    /// Class index of the response for `row`.
    #[inline]
    pub fn response(&self, row: usize) -> usize {
        self.responses[row]
    }

    pub fn responses(&self) -> &[usize] {
        &self.responses
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &r in &self.responses {
            counts[r] += 1;
        }
        counts
    }

    /// Rows `indices` in the given order, keeping the full class list.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let p = self.n_covariates();
        let mut values = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            covariate_names: self.covariate_names.clone(),
            values,
            n_rows: indices.len(),
            responses: indices.iter().map(|&i| self.responses[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

fn check_unique(
    names: &[String],
    err: impl Fn(String) -> DatasetError,
) -> Result<(), DatasetError> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(err(n.clone()));
        }
    }
    Ok(())
}
