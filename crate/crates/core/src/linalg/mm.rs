//! Matrix Market reader/writer for dense matrices and vectors.
//!
//! Supports `matrix coordinate` and `matrix array` objects with `real` or
//! `integer` fields and `general` or `symmetric` symmetry. Everything is
//! materialized densely.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses Matrix Market text into a dense matrix.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "header must be '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported layout '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(size_line, format!("bad size line: {e}")))?;

    let parse_f64 = |line: usize, t: &str| -> Result<f64> {
        let v: f64 = t
            .parse()
            .map_err(|_| parse_err(line, format!("bad number '{t}'")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(parse_err(line, "non-finite value"))
        }
    };

    match layout {
        Layout::Coordinate => {
            if dims.len() != 3 {
                return Err(parse_err(size_line, "coordinate size line needs 'rows cols nnz'"));
            }
            let (rows, cols, nnz) = (dims[0], dims[1], dims[2]);
            if symmetry == Symmetry::Symmetric && rows != cols {
                return Err(parse_err(size_line, "symmetric matrix must be square"));
            }
            let mut m = Matrix::zeros(rows, cols);
            let mut seen = 0;
            for (ln, l) in body {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(parse_err(ln, "entry must be 'i j value'"));
                }
                let i: usize = t[0].parse().map_err(|_| parse_err(ln, "bad row index"))?;
                let j: usize = t[1].parse().map_err(|_| parse_err(ln, "bad column index"))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(ln, format!("index ({i}, {j}) out of range")));
                }
                let v = parse_f64(ln, t[2])?;
                m[(i - 1, j - 1)] += v;
                if symmetry == Symmetry::Symmetric && i != j {
                    if i < j {
                        return Err(parse_err(ln, "symmetric storage must hold the lower triangle"));
                    }
                    m[(j - 1, i - 1)] += v;
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_line, format!("expected {nnz} entries, found {seen}")));
            }
            Ok(m)
        }
        Layout::Array => {
            if dims.len() != 2 {
                return Err(parse_err(size_line, "array size line needs 'rows cols'"));
            }
            let (rows, cols) = (dims[0], dims[1]);
            if symmetry == Symmetry::Symmetric && rows != cols {
                return Err(parse_err(size_line, "symmetric matrix must be square"));
            }
            let mut values = Vec::new();
            let mut last_line = size_line;
            for (ln, l) in body {
                last_line = ln;
                for t in l.split_whitespace() {
                    values.push(parse_f64(ln, t)?);
                }
            }
            let mut m = Matrix::zeros(rows, cols);
            let mut it = values.into_iter();
            let mut take = || it.next().ok_or_else(|| parse_err(last_line, "too few values"));
            match symmetry {
                Symmetry::General => {
                    for j in 0..cols {
                        for i in 0..rows {
                            m[(i, j)] = take()?;
                        }
                    }
                }
                Symmetry::Symmetric => {
                    for j in 0..cols {
                        for i in j..rows {
                            let v = take()?;
                            m[(i, j)] = v;
                            m[(j, i)] = v;
                        }
                    }
                }
            }
            if it.next().is_some() {
                return Err(parse_err(last_line, "too many values"));
            }
            Ok(m)
        }
    }
}

/// Parses a vector stored as an `n x 1` or `1 x n` matrix.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let m = parse_matrix(text)?;
    match m.shape() {
        (_, 1) => Ok(m.col(0).to_vec()),
        (1, _) => Ok(m.row(0)),
        (r, c) => Err(parse_err(
            2,
            format!("expected a vector (n x 1 or 1 x n), found {r}x{c}"),
        )),
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_vector(&fs::read_to_string(path)?)
}

/// Writes `m` as a Matrix Market object. Symmetric output keeps only the
/// lower triangle and requires `m` to be exactly symmetric.
pub fn write_matrix<W: Write>(
    mut w: W,
    m: &Matrix,
    layout: Layout,
    symmetry: Symmetry,
) -> Result<()> {
    let (rows, cols) = m.shape();
    if symmetry == Symmetry::Symmetric && (rows != cols || m.asymmetry() != 0.0) {
        return Err(Error::precondition(
            "write_matrix",
            "symmetric output requires an exactly symmetric matrix",
        ));
    }
    let layout_name = match layout {
        Layout::Coordinate => "coordinate",
        Layout::Array => "array",
    };
    let sym_name = match symmetry {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
    };
    writeln!(w, "%%MatrixMarket matrix {layout_name} real {sym_name}")?;
    let in_storage = |i: usize, j: usize| symmetry == Symmetry::General || i >= j;
    match layout {
        Layout::Array => {
            writeln!(w, "{rows} {cols}")?;
            for j in 0..cols {
                for i in 0..rows {
                    if in_storage(i, j) {
                        writeln!(w, "{:e}", m[(i, j)])?;
                    }
                }
            }
        }
        Layout::Coordinate => {
            let mut entries = Vec::new();
            for j in 0..cols {
                for i in 0..rows {
                    if in_storage(i, j) && m[(i, j)] != 0.0 {
                        entries.push((i, j, m[(i, j)]));
                    }
                }
            }
            writeln!(w, "{rows} {cols} {}", entries.len())?;
            for (i, j, v) in entries {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

pub fn write_vector<W: Write>(w: W, v: &[f64]) -> Result<()> {
    write_matrix(w, &Matrix::column_vector(v), Layout::Array, Symmetry::General)
}

pub fn write_matrix_file(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let f = fs::File::create(path)?;
    write_matrix(std::io::BufWriter::new(f), m, Layout::Array, Symmetry::General)
}

pub fn write_vector_file(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let f = fs::File::create(path)?;
    write_vector(std::io::BufWriter::new(f), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coordinate_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2.0\n2 1 -1\n2 2 2\n3 3 5e-1\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(
            m,
            Matrix::from_rows(&[[2.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 0.5]])
        );
    }

    #[test]
    fn array_general_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
    }

    #[test]
    fn array_symmetric_lower_triangle() {
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n7\n4\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.0, 7.0], [7.0, 4.0]]));
    }

    #[test]
    fn vector_shapes() {
        let col = "%%MatrixMarket matrix array real general\n3 1\n1\n2\n3\n";
        assert_eq!(parse_vector(col).unwrap(), vec![1.0, 2.0, 3.0]);
        let row = "%%MatrixMarket matrix coordinate integer general\n1 3 2\n1 1 4\n1 3 5\n";
        assert_eq!(parse_vector(row).unwrap(), vec![4.0, 0.0, 5.0]);
        let mat = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        assert!(parse_vector(mat).is_err());
    }

    #[test]
    fn malformed_inputs_report_lines() {
        let cases = [
            "",
            "%%MatrixMarket matrix array complex general\n1 1\n1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
            "%%MatrixMarket matrix array real general\n2 1\n1\n",
            "%%MatrixMarket matrix array real general\n1 1\n1\n2\n",
            "%%MatrixMarket matrix array real general\n1 1\nnan\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n",
        ];
        for c in cases {
            assert!(matches!(parse_matrix(c), Err(Error::Parse { .. })), "{c:?}");
        }
    }

    #[test]
    fn symmetric_writer_rejects_asymmetric() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let mut buf = Vec::new();
        assert!(write_matrix(&mut buf, &m, Layout::Array, Symmetry::Symmetric).is_err());
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in any::<u64>(),
            coordinate in any::<bool>(),
        ) {
            let mut rng = crate::linalg::random::seeded_rng(seed);
            let mut m = crate::linalg::random::standard_normal_matrix(rows, cols, &mut rng);
            if rows > 1 { m[(1, 0)] = 0.0; }
            let layout = if coordinate { Layout::Coordinate } else { Layout::Array };
            let mut buf = Vec::new();
            write_matrix(&mut buf, &m, layout, Symmetry::General).unwrap();
            let back = parse_matrix(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, m.clone());

            let s = m.matmul_tr(&m);
            let mut buf = Vec::new();
            write_matrix(&mut buf, &s, layout, Symmetry::Symmetric).unwrap();
            let back = parse_matrix(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
