//! CSV readers and writers for datasets, queries, predictions, run records
//! and sweep summaries. All output uses LF line endings and shortest
//! round-trip decimal reals.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::eval::{RunRecord, Summary};
use crate::inference::Estimate;
use crate::matrix::Matrix;

pub const RUN_HEADER: [&str; 11] = [
    "run_id",
    "preset",
    "k",
    "alpha",
    "beta",
    "seed",
    "window",
    "loss",
    "method",
    "error",
    "count_var",
];
pub const SUMMARY_HEADER: [&str; 6] = [
    "preset",
    "axis",
    "value",
    "final_loss",
    "mean_error_last3",
    "best_method",
];
pub const PREDICTION_HEADER: [&str; 3] = ["query_id", "method", "estimate"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn real(v: f64) -> String {
    v.to_string()
}

/// Header `x0,...,x{d-1}` then one row per point.
pub fn write_matrix<W: Write>(m: &Matrix, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record((0..m.ncols()).map(|j| format!("x{j}")))?;
    for row in m.rows() {
        out.write_record(row.iter().map(|&v| real(v)))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a headed numeric CSV. Header names are not interpreted.
pub fn read_matrix<R: Read>(r: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let cols = rdr.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: rec.len(),
            });
        }
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Malformed(format!("row {}: `{field}` is not a number", i + 1))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    Matrix::from_flat(rows, cols, data)
}

/// One row per (query, method), queries in input order.
pub fn write_predictions<W: Write>(predictions: &[[Estimate; 7]], w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(PREDICTION_HEADER)?;
    for (q, estimates) in predictions.iter().enumerate() {
        for e in estimates {
            out.write_record([q.to_string(), e.method.as_str().to_string(), real(e.value)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row per (window, method).
pub fn write_run_record<W: Write>(
    run_id: usize,
    record: &RunRecord,
    w: W,
    with_header: bool,
) -> Result<()> {
    let mut out = writer(w);
    if with_header {
        out.write_record(RUN_HEADER)?;
    }
    for win in &record.windows {
        for (method, err) in &win.per_method_error {
            out.write_record([
                run_id.to_string(),
                record.data_preset.clone(),
                record.hp.k.to_string(),
                real(record.hp.alpha),
                real(record.hp.beta),
                record.seed.to_string(),
                win.window_index.to_string(),
                real(win.cumulative_loss),
                method.as_str().to_string(),
                real(*err),
                real(win.count_var),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(summary: &Summary, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for row in &summary.rows {
        let (method, err) = row.best_method();
        out.write_record([
            row.preset.clone(),
            row.axis.as_str().to_string(),
            real(row.value),
            real(row.final_loss),
            real(err),
            method.as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
