//! Text exports. Every file is written to a sibling temporary and renamed
//! into place.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Hex SHA-256 digest.
pub fn content_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Coordinate format: `rows cols nnz`, then 1-based `row col value`
/// triplets of the nonzero entries in column-major order.
pub fn matrix_coordinate(m: &DMatrix<f64>) -> String {
    let nnz = m.iter().filter(|v| **v != 0.0).count();
    let mut out = format!("{} {} {}\n", m.nrows(), m.ncols(), nnz);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, fmt_f64(v));
            }
        }
    }
    out
}

pub fn parse_matrix_coordinate(text: &str) -> Result<DMatrix<f64>> {
    let bad = |line: usize, what: &str| Error::ConfigSyntax { line, message: what.to_string() };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('%'));
    let (hl, header) = lines.next().ok_or_else(|| bad(1, "empty matrix file"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(hl + 1, "bad header")))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(bad(hl + 1, "header must be `rows cols nnz`"));
    }
    let mut m = DMatrix::zeros(dims[0], dims[1]);
    let mut count = 0;
    for (ln, line) in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(bad(ln + 1, "expected `row col value`"));
        }
        let i: usize = t[0].parse().map_err(|_| bad(ln + 1, "bad row"))?;
        let j: usize = t[1].parse().map_err(|_| bad(ln + 1, "bad column"))?;
        let v: f64 = t[2].parse().map_err(|_| bad(ln + 1, "bad value"))?;
        if i == 0 || j == 0 || i > dims[0] || j > dims[1] {
            return Err(bad(ln + 1, "index out of range"));
        }
        m[(i - 1, j - 1)] = v;
        count += 1;
    }
    if count != dims[2] {
        return Err(bad(hl + 1, "nnz does not match the number of triplets"));
    }
    Ok(m)
}

/// CSV builder with a `#` comment header carrying the manifest hash and
/// column units.
#[derive(Debug, Clone)]
pub struct CsvTable {
    hash: String,
    columns: Vec<(String, String)>,
    comments: Vec<String>,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(hash: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            hash: hash.to_string(),
            columns: columns.iter().map(|(n, u)| (n.to_string(), u.to_string())).collect(),
            comments: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(hash: &str, columns: Vec<(String, String)>) -> Self {
        Self { hash: hash.to_string(), columns, comments: Vec::new(), rows: Vec::new() }
    }

    pub fn comment(&mut self, text: impl Into<String>) {
        self.comments.push(text.into());
    }

    pub fn push_raw(&mut self, cells: Vec<String>) -> Result<()> {
        if cells.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                context: "csv row",
                expected: self.columns.len(),
                got: cells.len(),
            });
        }
        self.rows.push(cells.join(","));
        Ok(())
    }

    pub fn push(&mut self, values: &[f64]) -> Result<()> {
        self.push_raw(values.iter().map(|v| fmt_f64(*v)).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = format!("# manifest_sha256: {}\n", self.hash);
        let units: Vec<String> = self.columns.iter().map(|(n, u)| format!("{n} [{u}]")).collect();
        let _ = writeln!(out, "# units: {}", units.join(", "));
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(out, "{}", names.join(","));
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.render())
    }
}

/// `tau,dof_0,...` table of trajectory positions.
pub fn trajectory_table(traj: &Trajectory, hash: &str) -> Result<CsvTable> {
    let mut cols = vec![("tau".to_string(), "-".to_string())];
    cols.extend((0..traj.dim()).map(|i| (format!("dof_{i}"), "-".to_string())));
    let mut t = CsvTable::with_columns(hash, cols);
    t.comment(format!("provenance: {}", traj.provenance));
    t.comment(format!(
        "steps: {}, newton_iterations: {}, bisections: {}",
        traj.stats.steps, traj.stats.newton_iterations, traj.stats.bisections
    ));
    for (tau, q) in traj.tau.iter().zip(&traj.q) {
        let mut row = Vec::with_capacity(q.len() + 1);
        row.push(*tau);
        row.extend(q.iter().copied());
        t.push(&row)?;
    }
    Ok(t)
}

/// Reads back the numeric body of a CSV written by [`CsvTable`].
pub fn read_csv_body(text: &str) -> Result<(Vec<String>, Vec<DVector<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("csv has no header".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("non-numeric cell `{c}`"))))
                .collect::<Result<Vec<f64>>>()
                .map(DVector::from_vec)
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_round_trip_is_exact() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0 / 3.0, 0.0, 0.0, -2.5e-17, 1e300, 7.0]);
        let text = matrix_coordinate(&m);
        assert!(text.starts_with("3 2 4\n"));
        assert_eq!(parse_matrix_coordinate(&text).unwrap(), m);
    }

    #[test]
    fn csv_header_and_atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = CsvTable::new("abc", &[("tau", "-"), ("e", "%")]);
        t.push(&[0.5, 1.0 / 3.0]).unwrap();
        assert!(t.push(&[1.0]).is_err());
        let path = dir.path().join("sub/out.csv");
        t.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# manifest_sha256: abc\n# units: tau [-], e [%]\ntau,e\n"));
        let (h, rows) = read_csv_body(&text).unwrap();
        assert_eq!(h, ["tau", "e"]);
        assert_eq!(rows[0][1], 1.0 / 3.0);
        let leftovers: Vec<_> = std::fs::read_dir(dir.path().join("sub")).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            content_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
