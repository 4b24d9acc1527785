//! CSV output: comma separated, header row, LF endings, reals in scientific
//! notation with 17 significant digits.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fbm::FbmSample;
use crate::integrator::GroupPath;

/// Formats a real with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub(crate) fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Columns `t, B1, ..., Bd`.
pub fn write_sample_csv<W: Write>(sample: &FbmSample, out: W) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=sample.dim()).map(|i| format!("B{i}")));
    w.write_record(&header).map_err(io)?;
    for (k, &t) in sample.grid().points().iter().enumerate() {
        let mut row = vec![real(t)];
        row.extend(sample.values().iter().map(|c| real(c[k])));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Columns `t, x11, x12, ...` (row-major matrix entries).
pub fn write_path_csv<W: Write>(path: &GroupPath, out: W) -> Result<()> {
    let mut w = writer(out);
    let n = path.at(0).dim();
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        header.extend((1..=n).map(|j| format!("x{i}{j}")));
    }
    w.write_record(&header).map_err(io)?;
    for (g, &t) in path.elements().iter().zip(path.grid().points()) {
        let mut row = vec![real(t)];
        for i in 0..n {
            row.extend((0..n).map(|j| real(g.matrix()[(i, j)])));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Generic table with a header and real-valued rows.
pub fn write_table_csv<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(header).map_err(io)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch { expected: header.len(), got: row.len() });
        }
        w.write_record(row.iter().map(|&x| real(x))).map_err(io)?;
    }
    w.flush().map_err(io)
}
