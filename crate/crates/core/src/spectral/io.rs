//! Matrix file formats: dense CSV (one row per line, comma-separated
//! decimals) and the JSON wrapper `{"n": ..., "data": [[...]]}`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{symmetrize, SymMatrix, Tolerances};

/// JSON wire form of a dense matrix.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub data: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixJson {
            n: m.nrows(),
            data: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn into_matrix(self) -> Result<DMatrix<f64>> {
        rows_to_matrix(self.data).and_then(|m| {
            if m.nrows() != self.n {
                Err(Error::Parse(format!(
                    "declared n={} but data has {} rows",
                    self.n,
                    m.nrows()
                )))
            } else {
                Ok(m)
            }
        })
    }
}

fn rows_to_matrix(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Parse("matrix has no rows".into()));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(Error::Parse("matrix has an empty row".into()));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged rows in matrix".into()));
    }
    let nrows = rows.len();
    Ok(DMatrix::from_fn(nrows, cols, |i, j| rows[i][j]))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))
            })
            .collect();
        rows.push(row?);
    }
    rows_to_matrix(rows)
}

pub fn read_matrix_json(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let dto: MatrixJson = serde_json::from_str(&text)?;
    dto.into_matrix()
}

/// Reads CSV or JSON depending on the file extension (`.json` selects JSON).
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_matrix_json(path),
        _ => read_matrix_csv(path),
    }
}

/// Reads a matrix expected to be symmetric. Inputs asymmetric beyond
/// `tols.sym_tol` are rejected unless `force_symmetrize` is set, in which case
/// `(M + M')/2` is taken.
pub fn read_sym_matrix(path: &Path, force_symmetrize: bool, tols: &Tolerances) -> Result<SymMatrix> {
    let m = read_matrix(path)?;
    if force_symmetrize {
        symmetrize(&m)
    } else {
        SymMatrix::with_tolerances(m, tols)
    }
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_matrix_json(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let dto = MatrixJson::from_matrix(m);
    std::fs::write(path, serde_json::to_string_pretty(&dto)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("eigopt_io_test_csv");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("m.csv");
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.5, 2.5, -0.125]);
        write_matrix_csv(&p, &m).unwrap();
        let back = read_matrix_csv(&p).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn json_round_trip_and_shape_check() {
        let dir = std::env::temp_dir().join("eigopt_io_test_json");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("m.json");
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        write_matrix_json(&p, &m).unwrap();
        assert_eq!(read_matrix_json(&p).unwrap(), m);

        std::fs::write(&p, r#"{"n": 3, "data": [[1.0]]}"#).unwrap();
        assert!(read_matrix_json(&p).is_err());
    }

    #[test]
    fn asymmetric_input_rejected_unless_forced() {
        let dir = std::env::temp_dir().join("eigopt_io_test_sym");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("m.csv");
        std::fs::write(&p, "0,2\n0,0\n").unwrap();
        let tols = Tolerances::default();
        assert!(read_sym_matrix(&p, false, &tols).is_err());
        let s = read_sym_matrix(&p, true, &tols).unwrap();
        assert_eq!(s.matrix()[(0, 1)], 1.0);
    }

    #[test]
    fn malformed_csv_is_a_parse_error() {
        let dir = std::env::temp_dir().join("eigopt_io_test_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.csv");
        std::fs::write(&p, "1,2\nx,4\n").unwrap();
        assert!(matches!(read_matrix_csv(&p), Err(Error::Parse(_))));
    }
}
