//! CSV readers and writers. Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::derivative::GridFunction;
use crate::error::{Error, Result};

pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    let s = s.trim();
    match s {
        "nan" | "NaN" => Ok(f64::NAN),
        _ => s
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number"))),
    }
}

/// `t,value` rows preceded by a `# nlcalc-grid a=.. b=.. n=..` header.
pub fn grid_to_csv(u: &GridFunction) -> String {
    let mut out = format!(
        "# nlcalc-grid a={} b={} n={}\nt,value\n",
        format_number(u.a()),
        format_number(u.b()),
        u.len()
    );
    for (i, v) in u.values().iter().enumerate() {
        let _ = writeln!(out, "{},{}", format_number(u.t(i)), format_number(*v));
    }
    out
}

/// Reads a grid CSV. Without the header the grid is inferred from the first
/// column, which must be uniformly spaced.
pub fn grid_from_csv(text: &str) -> Result<GridFunction> {
    let mut header: Option<(f64, f64)> = None;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut a = None;
            let mut b = None;
            for tok in rest.split_whitespace() {
                if let Some(v) = tok.strip_prefix("a=") {
                    a = Some(parse_number(v, i + 1)?);
                } else if let Some(v) = tok.strip_prefix("b=") {
                    b = Some(parse_number(v, i + 1)?);
                }
            }
            if let (Some(a), Some(b)) = (a, b) {
                header = Some((a, b));
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 2 {
            return Err(Error::Parse(format!("line {}: expected `t,value`", i + 1)));
        }
        if cols[0].trim().parse::<f64>().is_err() && ts.is_empty() {
            continue; // column names
        }
        ts.push(parse_number(cols[0], i + 1)?);
        vs.push(parse_number(cols[1], i + 1)?);
    }
    if vs.len() < 2 {
        return Err(Error::Parse("grid needs at least two rows".into()));
    }
    let (a, b) = match header {
        Some(ab) => ab,
        None => {
            let h = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
            for w in ts.windows(2) {
                if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0) {
                    return Err(Error::Parse("t column is not uniformly spaced".into()));
                }
            }
            (ts[0], ts[ts.len() - 1] + h)
        }
    };
    GridFunction::new(a, b, vs)
}

pub fn read_grid(path: &Path) -> Result<GridFunction> {
    grid_from_csv(&std::fs::read_to_string(path)?)
}

/// Table with a shared first column and one column per curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub x_name: String,
    pub x: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Curves {
    pub fn new(x_name: impl Into<String>, x: Vec<f64>) -> Self {
        Self {
            x_name: x_name.into(),
            x,
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.x.len() {
            return Err(Error::GridMismatch(format!(
                "column has {} rows, table has {}",
                values.len(),
                self.x.len()
            )));
        }
        self.columns.push((name.into(), values));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.x_name.clone();
        for (n, _) in &self.columns {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, x) in self.x.iter().enumerate() {
            out.push_str(&format_number(*x));
            for (_, v) in &self.columns {
                out.push(',');
                out.push_str(&format_number(v[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Two-column `s,alpha` table for a tabulated kernel profile.
pub fn read_kernel_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut s = Vec::new();
    let mut a = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 2 {
            return Err(Error::Parse(format!("line {}: expected `s,alpha`", i + 1)));
        }
        if cols[0].trim().parse::<f64>().is_err() && s.is_empty() {
            continue;
        }
        s.push(parse_number(cols[0], i + 1)?);
        a.push(parse_number(cols[1], i + 1)?);
    }
    Ok((s, a))
}
