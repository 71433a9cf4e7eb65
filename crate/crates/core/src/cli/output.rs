//! File formats written by the command-line tool.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::scalar::Scalar;
use crate::types::{CausalVector, Method, TemporalOrderMatrix};

const NA: &str = "NA";
const NAVY: [u8; 3] = [0, 0, 128];
const RED: [u8; 3] = [255, 0, 0];
const BLACK: [u8; 3] = [0, 0, 0];

fn fixed(v: f64) -> String {
    format!("{v:.9}")
}

/// `window_start_s` followed by one column per shift (ms); undefined cells
/// are `NA`. Values use nine fixed decimals so identical runs give
/// identical bytes.
pub fn render_matrix_csv<T: Scalar>(matrix: &TemporalOrderMatrix<T>) -> String {
    let mut out = String::from("window_start_s");
    for s in matrix.shifts_s() {
        write!(out, ",{}", fixed(s * 1000.0)).unwrap();
    }
    out.push('\n');
    for (t, row) in matrix.window_start_times_s().iter().zip(matrix.rows()) {
        out.push_str(&fixed(*t));
        for cell in row {
            out.push(',');
            match cell {
                Some(v) => out.push_str(&fixed(v.as_f64())),
                None => out.push_str(NA),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv<T: Scalar>(
    matrix: &TemporalOrderMatrix<T>,
    path: impl AsRef<Path>,
) -> io::Result<()> {
    std::fs::write(path, render_matrix_csv(matrix))
}

/// Matrix CSV contents as plain numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTable {
    pub shifts_ms: Vec<f64>,
    pub window_starts_s: Vec<f64>,
    /// Row-major, `None` for `NA`.
    pub scores: Vec<Vec<Option<f64>>>,
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> io::Result<MatrixTable> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty matrix file".into()))?;
    let mut cols = header.split(',');
    if cols.next() != Some("window_start_s") {
        return Err(bad("first header column must be window_start_s".into()));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| bad(format!("`{s}` is not a number")))
    };
    let shifts_ms = cols.map(num).collect::<io::Result<Vec<_>>>()?;
    let mut table = MatrixTable {
        shifts_ms,
        window_starts_s: Vec::new(),
        scores: Vec::new(),
    };
    for line in lines {
        let mut fields = line.split(',');
        table
            .window_starts_s
            .push(num(fields.next().unwrap_or_default())?);
        let row = fields
            .map(|f| if f == NA { Ok(None) } else { num(f).map(Some) })
            .collect::<io::Result<Vec<_>>>()?;
        if row.len() != table.shifts_ms.len() {
            return Err(bad(format!(
                "row has {} cells, header has {}",
                row.len(),
                table.shifts_ms.len()
            )));
        }
        table.scores.push(row);
    }
    Ok(table)
}

pub fn render_cv_csv(cv: &CausalVector) -> String {
    let mut out = String::from("window_start_s,cv_ms\n");
    for (t, v) in cv.window_start_times_s().iter().zip(cv.entries_ms()) {
        let v = v.map_or_else(|| NA.to_string(), fixed);
        writeln!(out, "{},{v}", fixed(*t)).unwrap();
    }
    out
}

fn lerp(from: [u8; 3], to: [u8; 3], u: f64) -> [u8; 3] {
    let u = u.clamp(0.0, 1.0);
    std::array::from_fn(|i| (from[i] as f64 + (to[i] as f64 - from[i] as f64) * u).round() as u8)
}

/// Binary PPM with one pixel per cell: windows left to right, shifts bottom
/// to top. Best scores are navy and worst red (LM on the fixed [0, 1] scale,
/// TD relative to the matrix-wide range); undefined cells are black.
pub fn render_heatmap<T: Scalar>(
    matrix: &TemporalOrderMatrix<T>,
    comment: Option<&str>,
) -> Vec<u8> {
    let (w, h) = (matrix.n_windows(), matrix.n_shifts());
    let defined = || matrix.scores().iter().flatten().map(|v| v.as_f64());
    let (lo, hi) = defined().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let badness = |v: f64| match matrix.method() {
        Method::Lm => 1.0 - v,
        Method::Td if hi > lo => (v - lo) / (hi - lo),
        Method::Td => 0.0,
    };

    let mut out = Vec::new();
    out.extend_from_slice(b"P6\n");
    if let Some(c) = comment {
        for line in c.lines() {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
    }
    out.extend_from_slice(format!("{w} {h}\n255\n").as_bytes());
    for k in (0..h).rev() {
        for win in 0..w {
            let px = matrix
                .get(win, k)
                .map_or(BLACK, |v| lerp(NAVY, RED, badness(v.as_f64())));
            out.extend_from_slice(&px);
        }
    }
    out
}

pub fn write_heatmap<T: Scalar>(
    matrix: &TemporalOrderMatrix<T>,
    path: impl AsRef<Path>,
    comment: Option<&str>,
) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&render_heatmap(matrix, comment))?;
    f.flush()
}
