//! Similarity CSV format: a first line `n=<count>` followed by `n` rows of
//! `n` comma-separated decimals. Item identifiers live in an optional sidecar
//! JSON file `{"item_ids": [...]}` next to the CSV (`<path>.ids.json`).

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::SimilarityMatrix;

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    item_ids: Vec<String>,
}

/// Sidecar path for `path`: `sim.csv` -> `sim.csv.ids.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".ids.json");
    PathBuf::from(name)
}

/// Renders a matrix with 17 significant digits per value.
pub fn similarity_to_csv<T: Scalar>(s: &SimilarityMatrix<T>) -> String {
    let n = s.n();
    let mut out = String::with_capacity(n * n * 24 + 16);
    out.push_str(&format!("n={n}\n"));
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_value(s.get(i, j).as_f64()));
        }
        out.push('\n');
    }
    out
}

fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn similarity_from_csv<T: Scalar>(text: &str) -> Result<SimilarityMatrix<T>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing `n=<count>` header".into(),
    })?;
    let n: usize = header
        .trim()
        .strip_prefix("n=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("expected `n=<count>`, found `{header}`"),
        })?;
    let mut entries = Array2::<T>::zeros((n, n));
    let mut row = 0;
    for (idx, line) in lines {
        if row >= n {
            return Err(Error::Dimension(format!(
                "more than {n} data rows (extra row at line {})",
                idx + 1
            )));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != n {
            return Err(Error::Dimension(format!(
                "row {row} (line {}) has {} values, expected {n}",
                idx + 1,
                fields.len()
            )));
        }
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("cell ({row}, {col}) `{field}` is not a number"),
            })?;
            entries[[row, col]] = T::lit(v);
        }
        row += 1;
    }
    if row != n {
        return Err(Error::Dimension(format!("expected {n} data rows, found {row}")));
    }
    SimilarityMatrix::new(entries)
}

/// Writes the CSV and, when the matrix carries item ids, the sidecar JSON.
pub fn write_similarity_csv<T: Scalar>(s: &SimilarityMatrix<T>, path: &Path) -> Result<()> {
    fs::write(path, similarity_to_csv(s))?;
    if let Some(ids) = s.item_ids() {
        let sidecar = Sidecar {
            item_ids: ids.to_vec(),
        };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    }
    Ok(())
}

/// Reads the CSV and attaches ids from the sidecar JSON when it exists.
pub fn read_similarity_csv<T: Scalar>(path: &Path) -> Result<SimilarityMatrix<T>> {
    let s = similarity_from_csv(&fs::read_to_string(path)?)?;
    let side = sidecar_path(path);
    if side.exists() {
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
        return s.with_item_ids(sidecar.item_ids);
    }
    Ok(s)
}
