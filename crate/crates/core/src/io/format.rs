//! Instance files.
//!
//! The native text format:
//!
//! ```text
//! # comment
//! n m
//! F i j v      upper triangle, 1-based; the mirror entry is implied
//! c i v
//! A r j v
//! b r v
//! ```
//!
//! Omitted entries are zero. JSON files hold dense arrays.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Bqp01Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Native,
    Json,
}

impl Format {
    /// `.json` means JSON, anything else the native format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Native,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonInstance {
    n: usize,
    m: usize,
    f: Vec<Vec<f64>>,
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
        return Err(Error::InvalidArgument(format!("{what} must be {nrows} × {ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
}

pub fn to_json_string(p: &Bqp01Instance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&JsonInstance {
        n: p.n(),
        m: p.m(),
        f: rows(p.f_hat()),
        c: p.c_hat().iter().copied().collect(),
        a: rows(p.a_hat()),
        b: p.b_hat().iter().copied().collect(),
    })?)
}

pub fn parse_json(s: &str) -> Result<Bqp01Instance> {
    let j: JsonInstance = serde_json::from_str(s)?;
    if j.c.len() != j.n || j.b.len() != j.m {
        return Err(Error::InvalidArgument("vector lengths do not match n and m".into()));
    }
    Bqp01Instance::new(
        from_rows(&j.f, j.n, j.n, "f")?,
        DVector::from_vec(j.c),
        from_rows(&j.a, j.m, j.n, "a")?,
        DVector::from_vec(j.b),
    )
}

/// Nonzero entries only; values use the shortest representation that reads
/// back to the same `f64`.
pub fn to_native_string(p: &Bqp01Instance) -> String {
    let (n, m) = (p.n(), p.m());
    let mut s = format!("{n} {m}\n");
    for i in 0..n {
        for j in i..n {
            let v = p.f_hat()[(i, j)];
            if v != 0.0 {
                let _ = writeln!(s, "F {} {} {v}", i + 1, j + 1);
            }
        }
    }
    for (i, &v) in p.c_hat().iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(s, "c {} {v}", i + 1);
        }
    }
    for r in 0..m {
        for j in 0..n {
            let v = p.a_hat()[(r, j)];
            if v != 0.0 {
                let _ = writeln!(s, "A {} {} {v}", r + 1, j + 1);
            }
        }
    }
    for (r, &v) in p.b_hat().iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(s, "b {} {v}", r + 1);
        }
    }
    s
}

pub fn parse_native(text: &str) -> Result<Bqp01Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let perr = |line: usize, message: String| Error::Parse { line, message };

    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing \"n m\" header".into()))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [n, m] = dims[..] else {
        return Err(perr(hline, format!("expected \"n m\", found {header:?}")));
    };
    let n: usize = n.parse().map_err(|e| perr(hline, format!("bad n: {e}")))?;
    let m: usize = m.parse().map_err(|e| perr(hline, format!("bad m: {e}")))?;

    let mut f = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    let mut seen: HashMap<(char, usize, usize), f64> = HashMap::new();

    for (ln, line) in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        let index = |t: &str, limit: usize, what: &str| -> Result<usize> {
            let i: usize = t.parse().map_err(|e| perr(ln, format!("bad {what} index {t:?}: {e}")))?;
            if i == 0 || i > limit {
                return Err(perr(ln, format!("{what} index {i} outside 1..={limit}")));
            }
            Ok(i - 1)
        };
        let value = |t: &str| -> Result<f64> {
            let v: f64 = t.parse().map_err(|e| perr(ln, format!("bad value {t:?}: {e}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(perr(ln, format!("value {t} is not finite")))
            }
        };
        let (key, v) = match tok[..] {
            ["F", i, j, v] => {
                let (i, j) = (index(i, n, "row")?, index(j, n, "column")?);
                let (i, j) = (i.min(j), i.max(j));
                let v = value(v)?;
                f[(i, j)] = v;
                f[(j, i)] = v;
                (('F', i, j), v)
            }
            ["c", i, v] => {
                let i = index(i, n, "variable")?;
                let v = value(v)?;
                c[i] = v;
                (('c', i, 0), v)
            }
            ["A", r, j, v] => {
                let (r, j) = (index(r, m, "constraint")?, index(j, n, "variable")?);
                let v = value(v)?;
                a[(r, j)] = v;
                (('A', r, j), v)
            }
            ["b", r, v] => {
                let r = index(r, m, "constraint")?;
                let v = value(v)?;
                b[r] = v;
                (('b', r, 0), v)
            }
            _ => return Err(perr(ln, format!("unrecognized line {line:?}"))),
        };
        if let Some(old) = seen.insert(key, v) {
            if old != v {
                return Err(perr(
                    ln,
                    format!("entry given twice with different values ({old} and {v})"),
                ));
            }
        }
    }
    Bqp01Instance::new(f, c, a, b)
}

pub fn read_instance(path: &Path, format: Format) -> Result<Bqp01Instance> {
    let text = std::fs::read_to_string(path)?;
    match format {
        Format::Native => parse_native(&text),
        Format::Json => parse_json(&text),
    }
}

pub fn write_instance(path: &Path, p: &Bqp01Instance, format: Format) -> Result<()> {
    let text = match format {
        Format::Native => to_native_string(p),
        Format::Json => to_json_string(p)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}
