use std::path::Path;

use super::{read_text, FormatError};
use crate::rf::Dataset;

/// Reads a comma-separated file with a header. Every column other than
/// `response` becomes a numeric covariate.
pub fn read_dataset(path: &Path, response: &str) -> Result<Dataset, FormatError> {
    parse_dataset(&read_text(path)?, response, None)
}

/// Like [`read_dataset`] but keeps only `covariates`, in that order.
pub fn read_dataset_with(
    path: &Path,
    response: &str,
    covariates: &[String],
) -> Result<Dataset, FormatError> {
    parse_dataset(&read_text(path)?, response, Some(covariates))
}

pub fn parse_dataset(
    text: &str,
    response: &str,
    covariates: Option<&[String]>,
) -> Result<Dataset, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(FormatError::MissingHeader),
    };
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    if header.iter().all(String::is_empty) {
        return Err(FormatError::MissingHeader);
    }

    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FormatError::MissingColumn(name.to_string()))
    };
    let response_col = find(response)?;
    let covariate_cols: Vec<usize> = match covariates {
        Some(names) => {
            if names.iter().any(|n| n == response) {
                return Err(FormatError::ResponseIsCovariate(response.to_string()));
            }
            names.iter().map(|n| find(n)).collect::<Result<_, _>>()?
        }
        None => (0..header.len()).filter(|&c| c != response_col).collect(),
    };

    let mut rows = Vec::new();
    let mut responses = Vec::new();
    for (r, record) in records.enumerate() {
        let record = record?;
        let row_no = r + 1;
        let cell = |c: usize| -> Result<&str, FormatError> {
            match record.get(c) {
                Some(v) if !v.is_empty() && v != "NA" => Ok(v),
                _ => Err(FormatError::MissingValue {
                    row: row_no,
                    column: header[c].clone(),
                }),
            }
        };
        let mut values = Vec::with_capacity(covariate_cols.len());
        for &c in &covariate_cols {
            let text = cell(c)?;
            let v: f64 = text.parse().map_err(|_| FormatError::NonNumeric {
                row: row_no,
                column: header[c].clone(),
                value: text.to_string(),
            })?;
            if !v.is_finite() {
                return Err(FormatError::NonNumeric {
                    row: row_no,
                    column: header[c].clone(),
                    value: text.to_string(),
                });
            }
            values.push(v);
        }
        responses.push(cell(response_col)?.to_string());
        rows.push(values);
    }

    let names = covariate_cols.iter().map(|&c| header[c].clone()).collect();
    Ok(Dataset::new(names, rows, &responses)?)
}
