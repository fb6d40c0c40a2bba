//! Matrix Market (`.mtx`) reader and writer for dense real matrices.
//!
//! Reads `coordinate` and `array` formats with `real` or `integer` fields and
//! `general`, `symmetric` or `skew-symmetric` storage. Symmetric storage is
//! expanded to the full matrix. Writes the `array real general` format with
//! shortest round-trip decimal values.

use std::io::{self, BufRead, Write};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MtxError {
    #[error("matrix market: empty input, expected a %%MatrixMarket header")]
    MissingHeader,
    #[error("matrix market: malformed header: {0}")]
    MalformedHeader(String),
    #[error("matrix market: unsupported field `{0}` (only real and integer are supported)")]
    UnsupportedField(String),
    #[error("matrix market: unsupported symmetry `{0}`")]
    UnsupportedSymmetry(String),
    #[error("matrix market: line {line}: bad size line: {msg}")]
    BadSize { line: usize, msg: String },
    #[error("matrix market: line {line}: bad entry: {msg}")]
    BadEntry { line: usize, msg: String },
    #[error("matrix market: expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("matrix market: read failed: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

impl Symmetry {
    fn mirror(self, value: f64) -> Option<f64> {
        match self {
            Symmetry::General => None,
            Symmetry::Symmetric => Some(value),
            Symmetry::SkewSymmetric => Some(-value),
        }
    }
}

fn parse_header(line: &str) -> Result<(Layout, Symmetry), MtxError> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(MtxError::MalformedHeader(line.trim().to_string()));
    }
    if tokens[1] != "matrix" {
        return Err(MtxError::MalformedHeader(format!(
            "object `{}` is not `matrix`",
            tokens[1]
        )));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(MtxError::MalformedHeader(format!("unknown format `{other}`"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(MtxError::UnsupportedField(other.to_string())),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(MtxError::UnsupportedSymmetry(other.to_string())),
    };
    Ok((layout, symmetry))
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize, MtxError> {
    tok.ok_or_else(|| MtxError::BadSize {
        line,
        msg: format!("missing {what}"),
    })?
    .parse()
    .map_err(|_| MtxError::BadSize {
        line,
        msg: format!("cannot parse {what}"),
    })
}

fn parse_value(tok: Option<&str>, line: usize) -> Result<f64, MtxError> {
    let tok = tok.ok_or_else(|| MtxError::BadEntry {
        line,
        msg: "missing value".into(),
    })?;
    tok.parse().map_err(|_| MtxError::BadEntry {
        line,
        msg: format!("cannot parse `{tok}` as a real number"),
    })
}

/// Parses a Matrix Market stream into a dense matrix.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DMatrix<f64>, MtxError> {
    let mut lines = reader.lines().enumerate();

    let (layout, symmetry) = match lines.next() {
        Some((_, line)) => parse_header(&line?)?,
        None => return Err(MtxError::MissingHeader),
    };

    // Skip comments and blank lines up to the size line.
    let mut data = lines.filter_map(|(i, line)| match line {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
        Err(e) => Some(Err(e)),
    });

    let (size_line, size) = match data.next() {
        Some(r) => r?,
        None => {
            return Err(MtxError::BadSize {
                line: 0,
                msg: "missing size line".into(),
            })
        }
    };
    let mut toks = size.split_whitespace();
    let rows = parse_usize(toks.next(), size_line, "row count")?;
    let cols = parse_usize(toks.next(), size_line, "column count")?;
    let nnz = match layout {
        Layout::Coordinate => Some(parse_usize(toks.next(), size_line, "entry count")?),
        Layout::Array => None,
    };
    if symmetry != Symmetry::General && rows != cols {
        return Err(MtxError::BadSize {
            line: size_line,
            msg: format!("symmetric storage needs a square matrix, got {rows}x{cols}"),
        });
    }

    let mut out = DMatrix::zeros(rows, cols);
    match layout {
        Layout::Coordinate => {
            let expected = nnz.unwrap_or(0);
            let mut found = 0;
            for entry in data {
                let (line, text) = entry?;
                let mut t = text.split_whitespace();
                let i = parse_index(t.next(), line, rows)?;
                let j = parse_index(t.next(), line, cols)?;
                let v = parse_value(t.next(), line)?;
                out[(i, j)] += v;
                if i != j {
                    if let Some(mv) = symmetry.mirror(v) {
                        out[(j, i)] += mv;
                    }
                }
                found += 1;
            }
            if found != expected {
                return Err(MtxError::EntryCount { expected, found });
            }
        }
        Layout::Array => {
            // Column-major; symmetric storage lists the lower triangle only.
            let positions: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..cols)
                    .flat_map(|j| (0..rows).map(move |i| (i, j)))
                    .collect(),
                Symmetry::Symmetric => (0..cols)
                    .flat_map(|j| (j..rows).map(move |i| (i, j)))
                    .collect(),
                Symmetry::SkewSymmetric => (0..cols)
                    .flat_map(|j| (j + 1..rows).map(move |i| (i, j)))
                    .collect(),
            };
            let mut found = 0;
            for entry in data {
                let (line, text) = entry?;
                let mut t = text.split_whitespace();
                let v = parse_value(t.next(), line)?;
                let Some(&(i, j)) = positions.get(found) else {
                    return Err(MtxError::EntryCount {
                        expected: positions.len(),
                        found: found + 1,
                    });
                };
                out[(i, j)] = v;
                if i != j {
                    if let Some(mv) = symmetry.mirror(v) {
                        out[(j, i)] = mv;
                    }
                }
                found += 1;
            }
            if found != positions.len() {
                return Err(MtxError::EntryCount {
                    expected: positions.len(),
                    found,
                });
            }
        }
    }
    Ok(out)
}

fn parse_index(tok: Option<&str>, line: usize, bound: usize) -> Result<usize, MtxError> {
    let tok = tok.ok_or_else(|| MtxError::BadEntry {
        line,
        msg: "missing index".into(),
    })?;
    let idx: usize = tok.parse().map_err(|_| MtxError::BadEntry {
        line,
        msg: format!("cannot parse index `{tok}`"),
    })?;
    if idx == 0 || idx > bound {
        return Err(MtxError::BadEntry {
            line,
            msg: format!("index {idx} outside 1..={bound}"),
        });
    }
    Ok(idx - 1)
}

/// Writes `m` as `array real general`, column-major.
pub fn write_matrix_market<W: Write>(w: &mut W, m: &DMatrix<f64>) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for v in m.iter() {
        // `{:e}` prints the shortest representation that parses back exactly.
        writeln!(w, "{v:e}")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<DMatrix<f64>, MtxError> {
        read_matrix_market(s.as_bytes())
    }

    #[test]
    fn coordinate_general() {
        let m = read(
            "%%MatrixMarket matrix coordinate real general\n% comment\n3 3 2\n1 1 2.5\n3 2 -1\n",
        )
        .unwrap();
        assert_eq!(m.shape(), (3, 3));
        assert_eq!(m[(0, 0)], 2.5);
        assert_eq!(m[(2, 1)], -1.0);
        assert_eq!(m.iter().filter(|&&v| v == 0.0).count(), 7);
    }

    #[test]
    fn array_is_column_major() {
        let m = read("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
    }

    #[test]
    fn symmetric_expansion() {
        let m = read("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 7\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[4.0, 7.0, 7.0, 0.0]));
        let m = read("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
        let m = read("%%MatrixMarket matrix coordinate integer skew-symmetric\n2 2 1\n2 1 5\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, -5.0, 5.0, 0.0]));
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(read(""), Err(MtxError::MissingHeader)));
        assert!(matches!(
            read("%%MatrixMarket matrix bogus real general\n1 1\n1\n"),
            Err(MtxError::MalformedHeader(_))
        ));
        assert!(matches!(
            read("%MatrixMarket matrix array real general\n1 1\n1\n"),
            Err(MtxError::MalformedHeader(_))
        ));
        assert!(matches!(
            read("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
            Err(MtxError::UnsupportedField(f)) if f == "complex"
        ));
        assert!(matches!(
            read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n"),
            Err(MtxError::EntryCount { expected: 2, found: 1 })
        ));
        assert!(matches!(
            read("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n"),
            Err(MtxError::BadEntry { .. })
        ));
        assert!(matches!(
            read("%%MatrixMarket matrix array real general\n2 x\n"),
            Err(MtxError::BadSize { .. })
        ));
    }

    #[test]
    fn write_then_read_is_exact() {
        let mut rng = crate::linalg::rng_from_seed(21);
        let m = crate::linalg::gaussian_matrix(10, 7, &mut rng) * 1e-3;
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &m).unwrap();
        let back = read_matrix_market(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }
}
