use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::observed::ObservedMatrix;

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

/// Header-less comma-separated values. An empty field or `NA` is missing.
pub fn parse_matrix_csv<R: Read>(reader: R) -> Result<ObservedMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                line,
                expected,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                values.push(0.0);
                mask.push(false);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    line,
                    col: col + 1,
                    text: cell.to_string(),
                })?;
                values.push(v);
                mask.push(true);
            }
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(Error::NoObservations);
    }
    let values = Array2::from_shape_vec((rows, cols), values).expect("rectangular by construction");
    let mask = Array2::from_shape_vec((rows, cols), mask).expect("rectangular by construction");
    ObservedMatrix::new(values, mask)
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<ObservedMatrix> {
    parse_matrix_csv(BufReader::new(File::open(path)?))
}

fn write_rows<W: Write>(out: W, rows: usize, cols: usize, cell: impl Fn(usize, usize) -> Option<f64>) -> Result<()> {
    let mut out = BufWriter::new(out);
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.write_all(b",")?;
            }
            if let Some(v) = cell(i, j) {
                // Debug formatting is the shortest string that parses back to the same f64.
                write!(out, "{v:?}")?;
            } else if cols == 1 {
                out.write_all(b"NA")?;
            }
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes observed entries, leaving missing ones empty (`NA` in a single-column
/// matrix, where an empty line would be skipped).
pub fn write_matrix_csv<W: Write>(out: W, m: &ObservedMatrix) -> Result<()> {
    write_rows(out, m.rows(), m.cols(), |i, j| m.get(i, j))
}

pub fn write_dense_csv<W: Write>(out: W, m: &Array2<f64>) -> Result<()> {
    let (r, c) = m.dim();
    write_rows(out, r, c, |i, j| Some(m[[i, j]]))
}
