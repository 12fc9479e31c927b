//! CSV ingestion: header-matched columns, an optional leading column of
//! period labels, and per-variable transformations applied before the
//! panel is built. Every rejection names the offending row and column.

use std::path::Path;

use nalgebra::DMatrix;
use oasis_core::var::{TimeSeriesPanel, Transform};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(String),

    #[error("cannot read {path}: {detail}")]
    Io { path: String, detail: String },

    #[error("variable '{0}' missing from the CSV header")]
    UnknownVariable(String),

    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRows {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column '{column}': value {value} is not positive under log-diff")]
    NonPositiveValueUnderLog {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("row {row}, column '{column}': non-finite value after transformation")]
    NonFinite { row: usize, column: String },

    #[error("{0} data rows are too few to difference")]
    TooShort(usize),

    #[error("panel construction failed: {0}")]
    Panel(#[from] oasis_core::Error),
}

/// Reads the CSV at `path` and returns the transformed panel holding the
/// variables in `variables` order. The first CSV column is treated as
/// period labels when its header is not a requested variable; extra data
/// columns are ignored.
pub fn ingest_csv(
    path: &Path,
    variables: &[(String, Transform)],
) -> Result<TimeSeriesPanel, IngestError> {
    let raw = read_columns(path, variables)?;
    transform_columns(raw, variables)
}

pub struct RawColumns {
    /// One column of raw values per requested variable, in request order.
    pub values: Vec<Vec<f64>>,
    /// Period labels (row numbers when the file has no label column).
    pub labels: Vec<String>,
}

/// Reads and locates the requested variables without transforming them.
pub fn read_columns(
    path: &Path,
    variables: &[(String, Transform)],
) -> Result<RawColumns, IngestError> {
    if !path.exists() {
        return Err(IngestError::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();

    let label_column = match headers.first() {
        Some(first) if !variables.iter().any(|(n, _)| n == first) => Some(0usize),
        _ => None,
    };

    let mut positions = Vec::with_capacity(variables.len());
    for (name, _) in variables {
        let pos = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::UnknownVariable(name.clone()))?;
        positions.push(pos);
    }

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); variables.len()];
    let mut labels = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1; // 1-based data row, header excluded
        let record = record.map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(IngestError::RaggedRows {
                row,
                got: record.len(),
                expected: headers.len(),
            });
        }
        labels.push(match label_column {
            Some(col) => record[col].to_string(),
            None => row.to_string(),
        });
        for (slot, &pos) in positions.iter().enumerate() {
            let field = &record[pos];
            let parsed: f64 = field.parse().map_err(|_| IngestError::BadNumber {
                row,
                column: variables[slot].0.clone(),
                value: field.to_string(),
            })?;
            values[slot].push(parsed);
        }
    }
    Ok(RawColumns { values, labels })
}

fn transform_columns(
    raw: RawColumns,
    variables: &[(String, Transform)],
) -> Result<TimeSeriesPanel, IngestError> {
    let t_raw = raw.labels.len();
    let needs_diff = variables
        .iter()
        .any(|(_, t)| matches!(t, Transform::Diff | Transform::LogDiff));
    let skip = usize::from(needs_diff);
    if t_raw <= skip {
        return Err(IngestError::TooShort(t_raw));
    }
    let t_obs = t_raw - skip;

    let mut data = DMatrix::zeros(t_obs, variables.len());
    for (j, (name, transform)) in variables.iter().enumerate() {
        let col = &raw.values[j];
        match transform {
            Transform::Levels => {
                for t in 0..t_obs {
                    data[(t, j)] = col[t + skip];
                }
            }
            Transform::Diff => {
                for t in 0..t_obs {
                    data[(t, j)] = col[t + 1] - col[t];
                }
            }
            Transform::LogDiff => {
                for (row, &v) in col.iter().enumerate() {
                    if v <= 0.0 {
                        return Err(IngestError::NonPositiveValueUnderLog {
                            row: row + 1,
                            column: name.clone(),
                            value: v,
                        });
                    }
                }
                for t in 0..t_obs {
                    data[(t, j)] = col[t + 1].ln() - col[t].ln();
                }
            }
        }
        for t in 0..t_obs {
            if !data[(t, j)].is_finite() {
                return Err(IngestError::NonFinite {
                    row: t + 1 + skip,
                    column: name.clone(),
                });
            }
        }
    }

    let names = variables.iter().map(|(n, _)| n.clone()).collect();
    let transforms = variables.iter().map(|(_, t)| *t).collect();
    let index = raw.labels[skip..].to_vec();
    Ok(TimeSeriesPanel::new(names, data, transforms, Some(index))?)
}

/// Reads instrument series: every non-label column is an instrument, in
/// file order, untransformed.
pub fn ingest_instruments(path: &Path) -> Result<(Vec<String>, DMatrix<f64>), IngestError> {
    if !path.exists() {
        return Err(IngestError::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();

    // A leading label column is detected by a failed numeric parse of the
    // first field of the first record.
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(IngestError::RaggedRows {
                row: row_idx + 1,
                got: record.len(),
                expected: headers.len(),
            });
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    let label_column = rows
        .first()
        .is_some_and(|r| r[0].parse::<f64>().is_err());
    let start = usize::from(label_column);
    let names: Vec<String> = headers[start..].to_vec();
    let mut data = DMatrix::zeros(rows.len(), names.len());
    for (i, row) in rows.iter().enumerate() {
        for j in 0..names.len() {
            data[(i, j)] = row[start + j].parse().map_err(|_| IngestError::BadNumber {
                row: i + 1,
                column: names[j].clone(),
                value: row[start + j].clone(),
            })?;
        }
    }
    Ok((names, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn write_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn vars(specs: &[(&str, Transform)]) -> Vec<(String, Transform)> {
        specs.iter().map(|(n, t)| (n.to_string(), *t)).collect()
    }

    #[test]
    fn levels_pass_through() {
        let f = write_csv("a,b\n1.0,2.0\n3.0,4.0\n");
        let panel = ingest_csv(
            f.path(),
            &vars(&[("a", Transform::Levels), ("b", Transform::Levels)]),
        )
        .unwrap();
        assert_eq!(panel.len(), 2);
        assert_eq!(panel.data()[(0, 0)], 1.0);
        assert_eq!(panel.data()[(1, 1)], 4.0);
        assert_eq!(panel.index(), ["1", "2"]);
    }

    #[test]
    fn label_column_and_column_order() {
        let f = write_csv("date,b,a\n1959Q1,2.0,1.0\n1959Q2,4.0,3.0\n");
        let panel = ingest_csv(
            f.path(),
            &vars(&[("a", Transform::Levels), ("b", Transform::Levels)]),
        )
        .unwrap();
        // Requested order wins over file order.
        assert_eq!(panel.names(), ["a", "b"]);
        assert_eq!(panel.data()[(0, 0)], 1.0);
        assert_eq!(panel.data()[(0, 1)], 2.0);
        assert_eq!(panel.index(), ["1959Q1", "1959Q2"]);
    }

    #[test]
    fn log_diff_of_exponential_is_constant() {
        let mut body = String::from("x\n");
        for t in 0..50 {
            body.push_str(&format!("{}\n", (0.01 * t as f64).exp()));
        }
        let f = write_csv(&body);
        let panel = ingest_csv(f.path(), &vars(&[("x", Transform::LogDiff)])).unwrap();
        assert_eq!(panel.len(), 49);
        for t in 0..49 {
            assert_abs_diff_eq!(panel.data()[(t, 0)], 0.01, epsilon = 1e-12);
        }
    }

    #[test]
    fn negative_under_log_is_located() {
        let f = write_csv("x\n1.0\n-2.0\n3.0\n");
        let err = ingest_csv(f.path(), &vars(&[("x", Transform::LogDiff)])).unwrap_err();
        match err {
            IngestError::NonPositiveValueUnderLog { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "x");
                assert_eq!(value, -2.0);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_variable_and_file() {
        let f = write_csv("a\n1.0\n");
        let err = ingest_csv(f.path(), &vars(&[("zzz", Transform::Levels)])).unwrap_err();
        assert!(matches!(err, IngestError::UnknownVariable(_)));

        let err = ingest_csv(
            Path::new("/nonexistent/file.csv"),
            &vars(&[("a", Transform::Levels)]),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::FileNotFound(_)));
    }

    #[test]
    fn ragged_rows_are_located() {
        let f = write_csv("a,b\n1.0,2.0\n3.0\n");
        let err = ingest_csv(
            f.path(),
            &vars(&[("a", Transform::Levels), ("b", Transform::Levels)]),
        )
        .unwrap_err();
        match err {
            IngestError::RaggedRows { row, got, expected } => {
                assert_eq!((row, got, expected), (2, 1, 2));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn bad_number_is_located() {
        let f = write_csv("a\n1.0\nxyz\n");
        let err = ingest_csv(f.path(), &vars(&[("a", Transform::Levels)])).unwrap_err();
        match err {
            IngestError::BadNumber { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
                assert_eq!(value, "xyz");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn diff_drops_first_row_for_all_columns() {
        let f = write_csv("a,b\n1.0,10.0\n2.0,20.0\n4.0,30.0\n");
        let panel = ingest_csv(
            f.path(),
            &vars(&[("a", Transform::Diff), ("b", Transform::Levels)]),
        )
        .unwrap();
        assert_eq!(panel.len(), 2);
        assert_eq!(panel.data()[(0, 0)], 1.0);
        assert_eq!(panel.data()[(1, 0)], 2.0);
        assert_eq!(panel.data()[(0, 1)], 20.0);
        assert_eq!(panel.index(), ["2", "3"]);
    }

    #[test]
    fn instruments_with_label_column() {
        let f = write_csv("date,z1,z2\n1990Q1,0.5,1.0\n1990Q2,0.7,2.0\n");
        let (names, data) = ingest_instruments(f.path()).unwrap();
        assert_eq!(names, ["z1", "z2"]);
        assert_eq!(data.nrows(), 2);
        assert_eq!(data[(1, 1)], 2.0);
    }
}
