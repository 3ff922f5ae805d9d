//! Text formats.
//!
//! Matrix files are COO text: a header line `i,j,value`, then one observed
//! entry per line with 0-based indices. A comment line `# shape: n,m` may
//! follow the header to fix the shape; without it the row count is the
//! largest row index plus one. Other lines starting with `#` are ignored.
//!
//! Feature files are plain CSV with `m` rows of `p` reals and an optional
//! header row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, MaskedMatrix};

pub const COO_HEADER: &str = "i,j,value";
const SHAPE_PREFIX: &str = "# shape:";

/// Entries and optional declared shape of a COO file.
#[derive(Debug, Clone)]
pub struct CooFile {
    pub shape: Option<(usize, usize)>,
    pub entries: Vec<(usize, usize, f64)>,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_coo(path: &Path) -> Result<CooFile> {
    let reader = BufReader::new(File::open(path)?);
    let mut shape = None;
    let mut entries = Vec::new();
    let mut seen_header = false;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n as u64 + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix(SHAPE_PREFIX) {
            let dims: Vec<&str> = rest.split(',').map(str::trim).collect();
            let parsed = match dims.as_slice() {
                [r, c] => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            shape = Some(parsed.ok_or_else(|| parse_error(path, line_no, "malformed shape line"))?);
            continue;
        }
        if text.starts_with('#') {
            continue;
        }
        if !seen_header {
            let normalized: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            if normalized != COO_HEADER {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("expected header `{COO_HEADER}`, found `{text}`"),
                ));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_error(
                path,
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let i = fields[0]
            .parse::<usize>()
            .map_err(|e| parse_error(path, line_no, format!("row index: {e}")))?;
        let j = fields[1]
            .parse::<usize>()
            .map_err(|e| parse_error(path, line_no, format!("column index: {e}")))?;
        let v = fields[2]
            .parse::<f64>()
            .map_err(|e| parse_error(path, line_no, format!("value: {e}")))?;
        if !v.is_finite() {
            return Err(parse_error(path, line_no, "value is not finite"));
        }
        entries.push((i, j, v));
    }
    if !seen_header {
        return Err(parse_error(path, 1, format!("missing header `{COO_HEADER}`")));
    }
    Ok(CooFile { shape, entries })
}

/// Reads a COO file as an `n x m` masked matrix with `m` given. The row
/// count comes from the shape line when present.
pub fn read_masked(path: &Path, n_cols: usize) -> Result<MaskedMatrix> {
    let coo = read_coo(path)?;
    if coo.entries.is_empty() {
        return Err(Error::NoObservedEntries);
    }
    let max_i = coo.entries.iter().map(|e| e.0).max().unwrap_or(0);
    let n_rows = match coo.shape {
        Some((r, c)) => {
            if c != n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "matrix declares {c} columns but {n_cols} are expected"
                )));
            }
            r
        }
        None => max_i + 1,
    };
    if let Some(&(i, j, _)) = coo.entries.iter().find(|e| e.1 >= n_cols || e.0 >= n_rows) {
        return Err(Error::DimensionMismatch(format!(
            "entry ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
        )));
    }
    MaskedMatrix::from_triplets(n_rows, n_cols, coo.entries)
}

/// Reads a COO file whose shape is known in advance.
pub fn read_masked_with_shape(path: &Path, n_rows: usize, n_cols: usize) -> Result<MaskedMatrix> {
    let coo = read_coo(path)?;
    if let Some(shape) = coo.shape.filter(|&s| s != (n_rows, n_cols)) {
        return Err(Error::DimensionMismatch(format!(
            "matrix declares shape {}x{} but {n_rows}x{n_cols} is expected",
            shape.0, shape.1
        )));
    }
    MaskedMatrix::from_triplets(n_rows, n_cols, coo.entries)
}

pub fn write_masked(a: &MaskedMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{COO_HEADER}")?;
    writeln!(w, "{SHAPE_PREFIX} {},{}", a.n_rows(), a.n_cols())?;
    for (i, j, v) in a.entries() {
        writeln!(w, "{i},{j},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dense CSV of reals, returning `(rows, cols, row-major data)`.
pub fn read_dense_csv(path: &Path, has_header: bool) -> Result<(usize, usize, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", width.unwrap_or(0), record.len()),
            ));
        }
        for field in record.iter() {
            let v = field
                .parse::<f64>()
                .map_err(|e| parse_error(path, line, format!("`{field}`: {e}")))?;
            data.push(v);
        }
        rows += 1;
    }
    Ok((rows, width.unwrap_or(0), data))
}

pub fn read_features(path: &Path, has_header: bool) -> Result<FeatureMatrix> {
    let (rows, cols, data) = read_dense_csv(path, has_header)?;
    FeatureMatrix::from_row_major(rows, cols, data)
}

pub fn write_features(b: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in 0..b.n_rows() {
        w.write_record(b.row(r).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a masked matrix and its feature matrix, cross-checking shapes.
pub fn load_problem(
    matrix_path: &Path,
    features_path: &Path,
    features_have_header: bool,
) -> Result<(MaskedMatrix, FeatureMatrix)> {
    let b = read_features(features_path, features_have_header)?;
    let a = read_masked(matrix_path, b.n_rows())?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn reads_rows_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let m = write(&dir, "a.coo", "i,j,value\n0,2,2.0\n0,0,1.5\n");
        let f = write(&dir, "b.csv", "1,2\n3,4\n5,6\n");
        let (a, b) = load_problem(&m, &f, false).unwrap();
        assert_eq!(a.row(0).cols, &[0, 2]);
        assert_eq!(a.row(0).vals, &[1.5, 2.0]);
        assert_eq!((b.n_rows(), b.n_features()), (3, 2));
    }

    #[test]
    fn shapes_are_cross_checked() {
        let dir = tempfile::tempdir().unwrap();
        let m = write(
            &dir,
            "a.coo",
            "i,j,value\n0,0,1\n1,2,2\n3,1,-1\n2,2,0.5\n",
        );
        let f = write(&dir, "b.csv", "x,y\n1,2\n3,4\n5,6\n");
        let (a, b) = load_problem(&m, &f, true).unwrap();
        assert_eq!((a.n_rows(), a.n_cols()), (4, 3));
        assert_eq!((b.n_rows(), b.n_features()), (3, 2));
    }

    #[test]
    fn header_only_file_has_no_entries() {
        let dir = tempfile::tempdir().unwrap();
        let m = write(&dir, "a.coo", "i,j,value\n");
        let f = write(&dir, "b.csv", "1\n2\n");
        assert!(matches!(
            load_problem(&m, &f, false),
            Err(Error::NoObservedEntries)
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let m = write(&dir, "a.coo", "i,j,value\n0,0,1\n0,x,2\n");
        let f = write(&dir, "b.csv", "1\n2\n");
        match load_problem(&m, &f, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let m = write(&dir, "b.coo", "i,j,value\n0,0\n");
        assert!(matches!(
            load_problem(&m, &f, false),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn column_out_of_range_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(&dir, "b.csv", "1\n2\n");
        let m = write(&dir, "a.coo", "i,j,value\n0,2,1\n");
        assert!(matches!(
            load_problem(&m, &f, false),
            Err(Error::DimensionMismatch(_))
        ));
        let m = write(&dir, "d.coo", "i,j,value\n0,1,1\n0,1,3\n");
        assert!(matches!(
            load_problem(&m, &f, false),
            Err(Error::DuplicateEntry { row: 0, col: 1 })
        ));
    }

    #[test]
    fn missing_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let m = write(&dir, "a.coo", "0,0,1\n");
        assert!(matches!(read_coo(&m), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn ragged_features_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(&dir, "b.csv", "1,2\n3\n");
        assert!(read_features(&f, false).is_err());
    }
}
