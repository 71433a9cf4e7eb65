use std::io::Write;
use std::path::Path;

use crate::scalar::Scalar;
use crate::types::{BivariateRecord, TimeSeries};

use super::PreprocessError;

/// Relative tolerance on time-step uniformity.
const STEP_TOLERANCE: f64 = 1e-6;

/// Column names of a bivariate CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub time: String,
    pub ch1: String,
    pub ch2: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            time: "time_s".into(),
            ch1: "ch1".into(),
            ch2: "ch2".into(),
        }
    }
}

fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, PreprocessError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| PreprocessError::MissingColumn((*name).to_string()))
        })
        .collect::<Result<_, _>>()?;

    let mut cols = vec![Vec::new(); names.len()];
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        for (col, &i) in cols.iter_mut().zip(&idx) {
            let field = row.get(i).ok_or_else(|| PreprocessError::Parse {
                line,
                message: format!("missing field {}", names[col_index(&idx, i)]),
            })?;
            let v: f64 = field.parse().map_err(|_| PreprocessError::Parse {
                line,
                message: format!("`{field}` is not a number"),
            })?;
            col.push(v);
        }
    }
    Ok(cols)
}

fn col_index(idx: &[usize], i: usize) -> usize {
    idx.iter().position(|&j| j == i).unwrap_or(0)
}

fn csv_error(e: csv::Error) -> PreprocessError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PreprocessError::Io(io),
        other => PreprocessError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Checks uniform spacing and returns `(start, rate)`. Rates within the step
/// tolerance of an integer are snapped to it.
fn infer_grid(times: &[f64]) -> Result<(f64, f64), PreprocessError> {
    if times.len() < 2 {
        return Err(PreprocessError::Parse {
            line: 0,
            message: format!(
                "need at least 2 rows to infer a sample rate, got {}",
                times.len()
            ),
        });
    }
    let step = times[1] - times[0];
    if !(step.is_finite() && step > 0.0) {
        return Err(PreprocessError::NonUniformSampling { row: 1 });
    }
    for (row, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > STEP_TOLERANCE * step {
            return Err(PreprocessError::NonUniformSampling { row: row + 1 });
        }
    }
    let mut rate = (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]);
    if (rate - rate.round()).abs() <= STEP_TOLERANCE * rate {
        rate = rate.round();
    }
    Ok((times[0], rate))
}

/// Reads a `time_s,ch1,ch2` file (column names per `columns`) into a record
/// whose labels are the two channel names.
pub fn load_bivariate_csv<T: Scalar>(
    path: impl AsRef<Path>,
    columns: &ColumnSpec,
) -> Result<BivariateRecord<T>, PreprocessError> {
    let cols = read_columns(path.as_ref(), &[&columns.time, &columns.ch1, &columns.ch2])?;
    let (start, rate) = infer_grid(&cols[0])?;
    let to_series =
        |v: &[f64]| TimeSeries::new(v.iter().map(|&x| T::lit(x)).collect(), rate, start);
    Ok(BivariateRecord::new(
        to_series(&cols[1])?,
        to_series(&cols[2])?,
        [columns.ch1.clone(), columns.ch2.clone()],
    )?)
}

/// Reads one uniformly sampled channel, e.g. a raw `time_s,ecg` file.
pub fn load_channel_csv<T: Scalar>(
    path: impl AsRef<Path>,
    time_column: &str,
    value_column: &str,
) -> Result<TimeSeries<T>, PreprocessError> {
    let cols = read_columns(path.as_ref(), &[time_column, value_column])?;
    let (start, rate) = infer_grid(&cols[0])?;
    Ok(TimeSeries::new(
        cols[1].iter().map(|&x| T::lit(x)).collect(),
        rate,
        start,
    )?)
}

/// Writes the overlapping part of a record as `time_s,ch1,ch2`, nine
/// decimals per value.
pub fn write_bivariate_csv<T: Scalar>(
    record: &BivariateRecord<T>,
    path: impl AsRef<Path>,
) -> Result<(), PreprocessError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "time_s,ch1,ch2")?;
    let (a, b) = (record.signal1(), record.signal2());
    for i in 0..a.len().min(b.len()) {
        writeln!(
            out,
            "{:.9},{:.9},{:.9}",
            a.time_of(i),
            a.values()[i].as_f64(),
            b.values()[i].as_f64()
        )?;
    }
    out.flush()?;
    Ok(())
}
