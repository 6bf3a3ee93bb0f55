//! Plain CSV files: one matrix row per line, no header; vectors are a single
//! column. Values are written with 17 significant digits so that reading a
//! written file gives back the same bits.

use std::path::Path;

use l1cert::DenseMatrix;

use crate::error::CliError;
use crate::json::format_float;

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input("io error", format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => {
                CliError::input("dimension mismatch", format!("{}: ragged rows: {e}", path.display()))
            }
            _ => CliError::input("parse error", format!("{}: {e}", path.display())),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                let v: f64 = field.parse().map_err(|_| {
                    CliError::input(
                        "parse error",
                        format!("{}: line {}: cannot parse {field:?}", path.display(), line + 1),
                    )
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CliError::input(
                        "non-finite input",
                        format!("{}: line {}: non-finite value", path.display(), line + 1),
                    ))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::input("parse error", format!("{}: no data", path.display())));
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    Ok(DenseMatrix::from_rows(&read_rows(path)?)?)
}

/// Accepts a single column, or a single row.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let rows = read_rows(path)?;
    if rows.len() == 1 {
        return Ok(rows.into_iter().next().unwrap());
    }
    if rows.iter().any(|r| r.len() != 1) {
        return Err(CliError::input(
            "dimension mismatch",
            format!("{}: expected a single column", path.display()),
        ));
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<(), CliError> {
    let io_err = |e: csv::Error| CliError::input("io error", format!("{}: {e}", path.display()));
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(io_err)?;
    for row in rows {
        writer.write_record(row.iter().map(|&v| format_float(v))).map_err(io_err)?;
    }
    writer
        .flush()
        .map_err(|e| CliError::input("io error", format!("{}: {e}", path.display())))
}

pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<(), CliError> {
    write_rows(path, (0..a.rows()).map(|i| a.row(i)))
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), CliError> {
    write_rows(path, v.chunks(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_vector_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        std::fs::write(&p, "1, 2.5 ,-3\n").unwrap();
        assert_eq!(read_vector(&p).unwrap(), vec![1.0, 2.5, -3.0]);
    }

    #[test]
    fn bad_input_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert_eq!(read_matrix(&p).unwrap_err().code, "dimension mismatch");
        std::fs::write(&p, "1,x\n").unwrap();
        assert_eq!(read_matrix(&p).unwrap_err().code, "parse error");
        std::fs::write(&p, "1,inf\n").unwrap();
        assert_eq!(read_matrix(&p).unwrap_err().code, "non-finite input");
        assert_eq!(read_matrix(&dir.path().join("missing.csv")).unwrap_err().code, "io error");
    }
}
