//! Edge-list export of max-cut instances.
//!
//! ```text
//! # scale S
//! # constant C
//! V E
//! i j w        1-based, one line per nonzero edge
//! ```
//!
//! Exported weights are `S·𝒜ᵢⱼ`, so cut values read back from the file are
//! `S` times the original ones and `C = eᵀQe` is unscaled.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::maxcut::MaxCutInstance;

/// Largest scale factor tried by the integer export.
pub const MAX_SCALE: f64 = 4096.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExportInfo {
    pub scale: f64,
    pub edges: usize,
    /// Integer scaling was requested but no power of two up to
    /// [`MAX_SCALE`] made every weight integral.
    pub unscaled_warning: bool,
}

fn integral_scale(w: &DMatrix<f64>) -> Option<f64> {
    let mut s = 1.0;
    while s <= MAX_SCALE {
        if w.iter().all(|&v| {
            let t = v * s;
            (t - t.round()).abs() <= 1e-9
        }) {
            return Some(s);
        }
        s *= 2.0;
    }
    None
}

pub fn maxcut_to_string(g: &MaxCutInstance, scale_to_integer: bool) -> (String, ExportInfo) {
    let n = g.n_vertices();
    let (scale, warn) = if scale_to_integer {
        match integral_scale(&g.weights) {
            Some(s) => (s, false),
            None => {
                log::warn!("no power of two up to {MAX_SCALE} makes the weights integral; writing them unscaled");
                (1.0, true)
            }
        }
    } else {
        (1.0, false)
    };
    let mut body = String::new();
    let mut edges = 0;
    for i in 0..n {
        for j in i + 1..n {
            let w = g.weights[(i, j)];
            if w != 0.0 {
                edges += 1;
                let w = w * scale;
                if scale_to_integer && !warn {
                    let _ = writeln!(body, "{} {} {}", i + 1, j + 1, w.round() as i64);
                } else {
                    let _ = writeln!(body, "{} {} {w}", i + 1, j + 1);
                }
            }
        }
    }
    let text = format!("# scale {scale}\n# constant {}\n{n} {edges}\n{body}", g.constant);
    (
        text,
        ExportInfo {
            scale,
            edges,
            unscaled_warning: warn,
        },
    )
}

pub fn export_maxcut(g: &MaxCutInstance, path: &Path, scale_to_integer: bool) -> Result<ExportInfo> {
    let (text, info) = maxcut_to_string(g, scale_to_integer);
    std::fs::write(path, text)?;
    Ok(info)
}

/// Reads an exported file back: the graph with weights divided by the
/// recorded scale, and that scale.
pub fn parse_maxcut(text: &str) -> Result<(MaxCutInstance, f64)> {
    let mut scale = 1.0;
    let mut constant = 0.0;
    let mut data = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('#') {
            let parts: Vec<&str> = c.split_whitespace().collect();
            let num = |t: &str| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            };
            match parts[..] {
                ["scale", v] => scale = num(v)?,
                ["constant", v] => constant = num(v)?,
                _ => {}
            }
        } else if !line.is_empty() {
            data.push((i + 1, line));
        }
    }
    let perr = |line: usize, message: String| Error::Parse { line, message };
    let (hl, header) = *data.first().ok_or_else(|| perr(1, "missing \"V E\" header".into()))?;
    let hv: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| perr(hl, format!("bad header: {e}"))))
        .collect::<Result<_>>()?;
    let [v, e] = hv[..] else {
        return Err(perr(hl, "expected \"V E\"".into()));
    };
    if data.len() - 1 != e {
        return Err(perr(hl, format!("header announces {e} edges, found {}", data.len() - 1)));
    }
    let mut w = DMatrix::zeros(v, v);
    for &(ln, line) in &data[1..] {
        let t: Vec<&str> = line.split_whitespace().collect();
        let [i, j, x] = t[..] else {
            return Err(perr(ln, format!("expected \"i j w\", found {line:?}")));
        };
        let idx = |s: &str| -> Result<usize> {
            let k: usize = s.parse().map_err(|e| perr(ln, format!("bad vertex {s:?}: {e}")))?;
            if k == 0 || k > v {
                return Err(perr(ln, format!("vertex {k} outside 1..={v}")));
            }
            Ok(k - 1)
        };
        let (i, j) = (idx(i)?, idx(j)?);
        let x: f64 = x.parse().map_err(|e| perr(ln, format!("bad weight: {e}")))?;
        w[(i, j)] = x / scale;
        w[(j, i)] = x / scale;
    }
    let mut g = MaxCutInstance::from_weights(w)?;
    g.constant = constant;
    Ok((g, scale))
}
