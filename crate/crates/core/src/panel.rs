//! Panel ingestion and the realized-volatility transform.
//!
//! CSV layout: UTF-8, comma separated, one header row. Column 1 holds the
//! time label, the remaining columns hold one series each. Rows with an
//! empty (or `NA`) cell are dropped with a warning; any other cell that does
//! not parse to a finite number is a hard error.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A `T x N` panel of observations with row labels and series names.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    values: DMatrix<f64>,
    time_labels: Vec<String>,
    series_names: Vec<String>,
}

impl TimeSeriesPanel {
    pub fn new(
        values: DMatrix<f64>,
        time_labels: Vec<String>,
        series_names: Vec<String>,
    ) -> Result<Self> {
        let (t, n) = values.shape();
        if n < 2 {
            return Err(Error::Dimension(format!("need at least 2 series, got {n}")));
        }
        if t < 1 {
            return Err(Error::Dimension("panel has no observations".into()));
        }
        if time_labels.len() != t || series_names.len() != n {
            return Err(Error::Dimension(format!(
                "labels ({} x {}) do not match values ({t} x {n})",
                time_labels.len(),
                series_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &series_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate series name {name:?}")));
            }
        }
        let mut seen = HashSet::new();
        for label in &time_labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::Schema(format!("duplicate time label {label:?}")));
            }
        }
        if let Some((idx, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Parse {
                row: idx % t + 1,
                column: idx / t + 1,
                message: "non-finite value".into(),
            });
        }
        Ok(Self {
            values,
            time_labels,
            series_names,
        })
    }

    /// Panel with labels `1..=T` and names `x1..xN`.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let (t, n) = values.shape();
        let labels = (1..=t).map(|i| i.to_string()).collect();
        let names = (1..=n).map(|j| format!("x{j}")).collect();
        Self::new(values, labels, names)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    pub fn series_names(&self) -> &[String] {
        &self.series_names
    }

    /// Number of observations `T`.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of series `N`.
    pub fn n_series(&self) -> usize {
        self.values.ncols()
    }

    /// Multiply every observation by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: &self.values * c,
            time_labels: self.time_labels.clone(),
            series_names: self.series_names.clone(),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na")
}

/// Reads a panel from any CSV source.
pub fn read_panel<R: Read>(reader: R) -> Result<TimeSeriesPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    if header.len() < 3 {
        return Err(Error::Dimension(format!(
            "need a time column and at least 2 series, header has {} columns",
            header.len()
        )));
    }
    let series_names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let n = series_names.len();
    let mut seen = HashSet::new();
    for name in &series_names {
        if !seen.insert(name.as_str()) {
            return Err(Error::Schema(format!("duplicate series name {name:?}")));
        }
    }

    let mut labels = Vec::new();
    let mut data = Vec::new();
    let mut dropped = 0usize;
    for (i, record) in rdr.records().enumerate() {
        // Header is line 1.
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.iter().skip(1).any(is_missing) {
            dropped += 1;
            continue;
        }
        let mut parsed = Vec::with_capacity(n);
        for (j, cell) in record.iter().enumerate().skip(1) {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            parsed.push(value);
        }
        labels.push(record[0].trim().to_string());
        data.push(parsed);
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} row(s) with missing values");
    }
    if data.is_empty() {
        return Err(Error::Dimension("panel has no complete rows".into()));
    }
    let values = DMatrix::from_fn(data.len(), n, |r, c| data[r][c]);
    TimeSeriesPanel::new(values, labels, series_names)
}

/// Reads a panel from a CSV file on disk.
pub fn load_panel(path: impl AsRef<Path>) -> Result<TimeSeriesPanel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_panel(file)
}

/// Renders a float so that parsing it back yields the same bits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a panel in the same layout `read_panel` accepts.
pub fn write_panel<W: Write>(panel: &TimeSeriesPanel, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Io {
        path: "<panel writer>".into(),
        source: std::io::Error::other(e),
    };
    let mut header = vec!["time".to_string()];
    header.extend(panel.series_names.iter().cloned());
    wtr.write_record(&header).map_err(io_err)?;
    for (r, label) in panel.time_labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend(panel.values.row(r).iter().map(|&v| format_f64(v)));
        wtr.write_record(&rec).map_err(io_err)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "<panel writer>".into(),
        source,
    })
}

/// Maps each realized variance `x` to the annualized volatility `100 * sqrt(252 x)`.
pub fn annualize_rv(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let t = panel.len();
    if let Some((idx, v)) = panel.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::Domain(format!(
            "negative realized variance {v} at row {}, series {:?}",
            idx % t + 1,
            panel.series_names[idx / t]
        )));
    }
    Ok(TimeSeriesPanel {
        values: panel.values.map(|x| 100.0 * (252.0 * x).sqrt()),
        time_labels: panel.time_labels.clone(),
        series_names: panel.series_names.clone(),
    })
}
