//! Matrix ingestion: Matrix Market (`array` or `coordinate`, `complex` or
//! `real`, `general`) and a plain CSV of `re,im` pairs in row-major order
//! below a `# rows cols` header.
//!
//! Writers print floats with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every entry bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{OperatorMatrix, C64};
use crate::error::{Error, Result};

/// Reads a file, picking the format from its first non-blank line.
pub fn read_matrix(path: &Path) -> Result<OperatorMatrix> {
    let text = std::fs::read_to_string(path)?;
    let is_mm = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().starts_with("%%MatrixMarket"));
    let m = if is_mm {
        read_matrix_market(&text)?
    } else {
        read_csv(&text)?
    };
    let label = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(m.with_label(label))
}

fn number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn index(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("not a nonnegative integer: {tok:?}")))
}

pub fn read_matrix_market(text: &str) -> Result<OperatorMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    let head: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if head.len() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(Error::parse(hline, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let coordinate = match head[2].as_str() {
        "array" => false,
        "coordinate" => true,
        other => return Err(Error::parse(hline, format!("unsupported format {other:?}"))),
    };
    let complex = match head[3].as_str() {
        "complex" => true,
        "real" | "integer" | "double" => false,
        other => return Err(Error::parse(hline, format!("unsupported field {other:?}"))),
    };
    if head[4] != "general" {
        return Err(Error::parse(hline, format!("unsupported symmetry {:?}", head[4])));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sline, size) = data.next().ok_or_else(|| Error::parse(hline, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let want = if coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(Error::parse(sline, format!("size line needs {want} integers")));
    }
    let rows = index(dims[0], sline)?;
    let cols = index(dims[1], sline)?;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(sline, "matrix dimensions must be positive"));
    }
    let per = if complex { 2 } else { 1 };
    let mut entries = vec![C64::new(0.0, 0.0); rows * cols];

    if coordinate {
        let nnz = index(dims[2], sline)?;
        let mut seen = 0;
        for (ln, l) in data {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 + per {
                return Err(Error::parse(ln, format!("expected {} fields", 2 + per)));
            }
            let (i, j) = (index(toks[0], ln)?, index(toks[1], ln)?);
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(Error::parse(ln, format!("index ({i}, {j}) out of range")));
            }
            let im = if complex { number(toks[3], ln)? } else { 0.0 };
            entries[(i - 1) * cols + (j - 1)] += C64::new(number(toks[2], ln)?, im);
            seen += 1;
        }
        if seen != nnz {
            return Err(Error::parse(sline, format!("declared {nnz} entries, found {seen}")));
        }
    } else {
        let mut k = 0;
        for (ln, l) in data {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != per {
                return Err(Error::parse(ln, format!("expected {per} value(s) per line")));
            }
            if k == rows * cols {
                return Err(Error::parse(ln, "more entries than the declared size"));
            }
            let im = if complex { number(toks[1], ln)? } else { 0.0 };
            // column-major order
            let (i, j) = (k % rows, k / rows);
            entries[i * cols + j] = C64::new(number(toks[0], ln)?, im);
            k += 1;
        }
        if k != rows * cols {
            return Err(Error::parse(sline, format!("expected {} entries, found {k}", rows * cols)));
        }
    }
    OperatorMatrix::new(rows, cols, &entries)
}

pub fn write_matrix_market(a: &OperatorMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix array complex general\n");
    if !a.label().is_empty() {
        let _ = writeln!(out, "% {}", a.label());
    }
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let z = a.get(i, j);
            let _ = writeln!(out, "{} {}", z.re, z.im);
        }
    }
    out
}

pub fn read_csv(text: &str) -> Result<OperatorMatrix> {
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut values = Vec::new();
    let mut last_line = 0;
    for (i, l) in text.lines().enumerate() {
        let ln = i + 1;
        last_line = ln;
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            if dims.is_none() {
                let d: Vec<&str> = rest.split_whitespace().collect();
                if d.len() != 2 {
                    return Err(Error::parse(ln, "header must be '# rows cols'"));
                }
                let (r, c) = (index(d[0], ln)?, index(d[1], ln)?);
                if r == 0 || c == 0 {
                    return Err(Error::parse(ln, "matrix dimensions must be positive"));
                }
                dims = Some((r, c, ln));
            }
            continue;
        }
        if dims.is_none() {
            return Err(Error::parse(ln, "missing '# rows cols' header"));
        }
        let nums: Vec<f64> = t.split(',').map(|tok| number(tok, ln)).collect::<Result<_>>()?;
        if nums.len() % 2 != 0 {
            return Err(Error::parse(ln, "values must come in re,im pairs"));
        }
        values.extend(nums.chunks(2).map(|p| (C64::new(p[0], p[1]), ln)));
    }
    let (rows, cols, hline) = dims.ok_or_else(|| Error::parse(last_line.max(1), "missing '# rows cols' header"))?;
    if values.len() != rows * cols {
        let at = values.get(rows * cols).map_or(hline, |v| v.1);
        return Err(Error::parse(
            at,
            format!("expected {} entries, found {}", rows * cols, values.len()),
        ));
    }
    let entries: Vec<C64> = values.into_iter().map(|v| v.0).collect();
    OperatorMatrix::new(rows, cols, &entries)
}

pub fn write_csv(a: &OperatorMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} {}", a.rows(), a.cols());
    for z in a.row_major() {
        let _ = writeln!(out, "{},{}", z.re, z.im);
    }
    out
}
