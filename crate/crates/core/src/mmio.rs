//! Matrix Market reading and writing, plus plain-text vectors.

use crate::error::{Error, Result};
use crate::sparse::SparseMat;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_header(line_no: usize, line: &str) -> Result<(Layout, Symmetry)> {
    let toks: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(parse_err(line_no, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match toks[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(line_no, format!("unsupported layout '{other}'"))),
    };
    if toks[3] != "real" && toks[3] != "double" {
        return Err(parse_err(line_no, format!("unsupported field '{}', only real is accepted", toks[3])));
    }
    let sym = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(line_no, format!("unsupported symmetry '{other}'"))),
    };
    Ok((layout, sym))
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn parse_usize(line: usize, tok: Option<&str>) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing integer field"))?;
    tok.parse().map_err(|_| parse_err(line, format!("invalid integer '{tok}'")))
}

fn parse_f64(line: usize, tok: Option<&str>) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing value field"))?;
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("invalid real '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

/// Parses a real Matrix Market matrix (coordinate or array, general or symmetric).
///
/// Symmetric storage is expanded to full storage.
pub fn read_matrix_market(text: &str) -> Result<SparseMat> {
    let first = text.lines().next().ok_or_else(|| parse_err(1, "empty input"))?;
    let (layout, sym) = parse_header(1, first)?;
    let mut lines = data_lines(text);
    let (size_line, size) = lines.next().ok_or_else(|| parse_err(1, "missing size line"))?;
    let mut toks = size.split_whitespace();
    let nrows = parse_usize(size_line, toks.next())?;
    let ncols = parse_usize(size_line, toks.next())?;
    if sym == Symmetry::Symmetric && nrows != ncols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }

    let mut trip = Vec::new();
    match layout {
        Layout::Coordinate => {
            let nnz = parse_usize(size_line, toks.next())?;
            let mut count = 0;
            for (ln, l) in lines {
                let mut t = l.split_whitespace();
                let i = parse_usize(ln, t.next())?;
                let j = parse_usize(ln, t.next())?;
                let v = parse_f64(ln, t.next())?;
                if t.next().is_some() {
                    return Err(parse_err(ln, "unexpected extra field (complex data is not supported)"));
                }
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(parse_err(ln, format!("index ({i}, {j}) out of range")));
                }
                if sym == Symmetry::Symmetric && j > i {
                    return Err(parse_err(ln, "symmetric storage must list the lower triangle"));
                }
                trip.push((i - 1, j - 1, v));
                if sym == Symmetry::Symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
                count += 1;
            }
            if count != nnz {
                return Err(parse_err(size_line, format!("declared {nnz} entries, found {count}")));
            }
        }
        Layout::Array => {
            let mut vals = Vec::new();
            let mut last_line = size_line;
            for (ln, l) in lines {
                for tok in l.split_whitespace() {
                    vals.push(parse_f64(ln, Some(tok))?);
                }
                last_line = ln;
            }
            // column-major; symmetric arrays store the lower triangle only
            let mut k = 0;
            for j in 0..ncols {
                let start = if sym == Symmetry::Symmetric { j } else { 0 };
                for i in start..nrows {
                    let v = *vals
                        .get(k)
                        .ok_or_else(|| parse_err(last_line, "too few values for array data"))?;
                    k += 1;
                    if v != 0.0 {
                        trip.push((i, j, v));
                        if sym == Symmetry::Symmetric && i != j {
                            trip.push((j, i, v));
                        }
                    }
                }
            }
            if k != vals.len() {
                return Err(parse_err(last_line, "too many values for array data"));
            }
        }
    }
    SparseMat::from_triplets(nrows, ncols, trip)
}

/// Writes general coordinate format with 17 significant digits.
pub fn write_matrix_market(a: &SparseMat) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(s, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    s
}

/// Reads a vector from Matrix Market (array or n x 1 coordinate) or plain
/// one-value-per-line text.
pub fn read_vector(text: &str) -> Result<Vec<f64>> {
    if text.trim_start().starts_with("%%") {
        let m = read_matrix_market(text)?;
        if m.ncols() != 1 {
            return Err(Error::InvalidArgument(format!(
                "vector file holds a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut v = vec![0.0; m.nrows()];
        for (i, _, x) in m.triplets() {
            v[i] = x;
        }
        return Ok(v);
    }
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#') && !l.starts_with('%'))
        .map(|(ln, l)| parse_f64(ln, Some(l)))
        .collect()
}

/// Writes a vector as a Matrix Market dense array.
pub fn write_vector(v: &[f64]) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} 1", v.len());
    for x in v {
        let _ = writeln!(s, "{x:.16e}");
    }
    s
}
