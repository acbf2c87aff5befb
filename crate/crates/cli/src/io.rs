use std::fs;
use std::io::{self, Write};
use std::path::Path;

use jointida::CovMatrix;
use nalgebra::DMatrix;

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path.filter(|p| p.as_os_str() != "-") {
        Some(p) => fs::write(p, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::config(format!("cannot write to stdout: {e}"))),
    }
}

/// Numeric CSV with a mandatory header row; one observation per row.
pub fn read_csv(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let where_ = path.display();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::config(format!("cannot read {where_}: {e}")))?;
    let header = rdr.headers().map_err(|e| CliError::config(format!("{where_}: {e}")))?.clone();
    if header.is_empty() || header.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(CliError::config(format!("{where_}: missing header row")));
    }
    let p = header.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::config(format!("{where_}: {e}")))?;
        let line = r + 2;
        if record.len() != p {
            return Err(CliError::config(format!("{where_}, line {line}: {} fields, header has {p}", record.len())));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::config(format!("{where_}, line {line}: missing or invalid value `{field}` in column {}", c + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::config(format!("{where_}: no observations")));
    }
    Ok(DMatrix::from_row_slice(rows, p, &values))
}

/// Covariance matrix stored as CSV: header `X1..Xp`, then `p` rows.
pub fn read_cov_csv(path: &Path) -> Result<CovMatrix, CliError> {
    let m = read_csv(path)?;
    if !m.is_square() {
        return Err(CliError::config(format!("{}: covariance must be square, got {}x{}", path.display(), m.nrows(), m.ncols())));
    }
    CovMatrix::from_matrix(m).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn csv_text(data: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=data.ncols()).map(|j| format!("X{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in data.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -1.0 / 3.0, 1e-300, 2.5e10, std::f64::consts::PI, -0.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, csv_text(&m)).unwrap();
        assert_eq!(read_csv(&path).unwrap(), m);
    }

    #[test]
    fn missing_values_and_headers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "X1,X2\n1.0,\n").unwrap();
        assert!(read_csv(&path).unwrap_err().to_string().contains("column 2"));
        fs::write(&path, "X1,X2\n1.0,NA\n").unwrap();
        assert!(read_csv(&path).is_err());
        fs::write(&path, "1.0,2.0\n3.0,4.0\n").unwrap();
        assert!(read_csv(&path).unwrap_err().to_string().contains("header"));
    }
}
