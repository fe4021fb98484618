//! Time-series CSV files.
//!
//! Layout: header `t,x,v,u,alpha,beta,s,V,d` for single-node runs and
//! `t,x_1,v_1,...,V_1,x_2,...,d` for networks. Values use Rust's shortest
//! round-trip float formatting. A run that diverged ends with a
//! `# diverged t=<time>` line.

use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::TimeSeries;

pub fn timeseries_csv(series: &TimeSeries) -> String {
    let mut out = series.column_names().join(",");
    out.push('\n');
    let cols = series.columns();
    for k in 0..series.len() {
        for (j, c) in cols.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:?}", c[k]);
        }
        out.push('\n');
    }
    if let Some(t) = series.diverged_at {
        let _ = writeln!(out, "# diverged t={t:?}");
    }
    out
}

pub fn write_timeseries_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(timeseries_csv(series).as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Column-major contents of a CSV written by [`write_timeseries_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub diverged: bool,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers.iter().position(|h| h == name).map(|i| &self.columns[i][..])
    }
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut lines = text.lines();
    let headers: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::invalid_input("empty CSV"))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    let mut diverged = false;
    for (lineno, line) in lines.enumerate() {
        if line.starts_with('#') {
            diverged |= line.contains("diverged");
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != headers.len() {
            return Err(Error::invalid_input(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                headers.len(),
                fields.len()
            )));
        }
        for (col, f) in columns.iter_mut().zip(fields) {
            col.push(f.trim().parse::<f64>().map_err(|e| {
                Error::invalid_input(format!("line {}: {f:?}: {e}", lineno + 2))
            })?);
        }
    }
    Ok(CsvTable { headers, columns, diverged })
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    parse_csv(&std::fs::read_to_string(path)?)
}
