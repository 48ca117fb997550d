//! Long-format CSV artifacts.
//!
//! Every file starts with a `# manifest: <hash>` comment line linking it to
//! the run manifest, followed by a header row. Floats use `{:.16e}` so that
//! values round-trip exactly.

use std::io::Write;

use crate::connectedness::PosteriorSummary;
use crate::error::{Error, Result};
use crate::estimate::FocalEstimate;
use crate::inference::stacked_wald;
use crate::panel::{format_f64, TimeSeriesPanel};

pub const CONNECTEDNESS_HEADER: [&str; 7] =
    ["time_label", "band", "measure", "node", "median", "q025", "q975"];
pub const TESTS_HEADER: [&str; 7] = [
    "time_label",
    "band_a",
    "band_b",
    "statistic",
    "nse",
    "reject_5pct",
    "prob_a_gt_b",
];
pub const PROBABILITIES_HEADER: [&str; 5] = ["time_label", "band_a", "band_b", "prob_a_gt_b", "ties"];
pub const JOINT_TESTS_HEADER: [&str; 6] = [
    "time_label",
    "bands",
    "statistic",
    "restrictions",
    "critical_value_5pct",
    "reject_5pct",
];

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source: e,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn start<W: Write>(mut writer: W, manifest_hash: &str, header: &[&str]) -> Result<csv::Writer<W>> {
    writeln!(writer, "# manifest: {manifest_hash}").map_err(io_err)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(csv_err)?;
    Ok(w)
}

fn label(panel: &TimeSeriesPanel, focal_time: usize) -> &str {
    &panel.time_labels()[focal_time - 1]
}

/// One row per (time, band, measure, node) with posterior median and 95% interval.
///
/// `measure` is `total` (empty node), `from`, `to` or `net`.
pub fn write_connectedness_csv<W: Write>(
    writer: W,
    manifest_hash: &str,
    panel: &TimeSeriesPanel,
    estimates: &[FocalEstimate],
) -> Result<()> {
    let mut w = start(writer, manifest_hash, &CONNECTEDNESS_HEADER)?;
    let mut row = |t: &str, band: &str, measure: &str, node: &str, s: &PosteriorSummary| {
        w.write_record([
            t,
            band,
            measure,
            node,
            &format_f64(s.median),
            &format_f64(s.q025),
            &format_f64(s.q975),
        ])
        .map_err(csv_err)
    };
    for est in estimates {
        let t = label(panel, est.focal_time);
        for s in &est.summaries {
            row(t, &s.band, "total", "", &s.total)?;
            for (measure, values) in [("from", &s.from_degree), ("to", &s.to_degree), ("net", &s.net)] {
                for (name, v) in panel.series_names().iter().zip(values) {
                    row(t, &s.band, measure, name, v)?;
                }
            }
        }
    }
    w.flush().map_err(io_err)
}

/// Heterogeneity test and ordering probability for every ordered pair `a < b` of partition bands.
///
/// A degenerate test leaves `statistic`, `nse` and `reject_5pct` empty.
pub fn write_tests_csv<W: Write>(
    writer: W,
    manifest_hash: &str,
    panel: &TimeSeriesPanel,
    estimates: &[FocalEstimate],
) -> Result<()> {
    let mut w = start(writer, manifest_hash, &TESTS_HEADER)?;
    for est in estimates {
        let t = label(panel, est.focal_time);
        // The aggregate band is last and excluded from the pairwise tests.
        let n = est.bands.len() - 1;
        for a in 0..n {
            for b in a + 1..n {
                let (test, prob) = est.compare(a, b);
                let prob = prob?;
                let (stat, nse, reject) = match test {
                    Ok(t) => (
                        format_f64(t.statistic),
                        t.nse.map(format_f64).unwrap_or_default(),
                        t.reject.to_string(),
                    ),
                    Err(Error::DegenerateTest(_)) => Default::default(),
                    Err(e) => return Err(e),
                };
                w.write_record([
                    t,
                    est.bands[a].as_str(),
                    est.bands[b].as_str(),
                    &stat,
                    &nse,
                    &reject,
                    &format_f64(prob.prob),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

/// Posterior ordering probability `Pr(C(a) > C(b))` for every pair `a < b` of partition bands.
pub fn write_probabilities_csv<W: Write>(
    writer: W,
    manifest_hash: &str,
    panel: &TimeSeriesPanel,
    estimates: &[FocalEstimate],
) -> Result<()> {
    let mut w = start(writer, manifest_hash, &PROBABILITIES_HEADER)?;
    for est in estimates {
        let t = label(panel, est.focal_time);
        let n = est.bands.len() - 1;
        for a in 0..n {
            for b in a + 1..n {
                let prob = est.compare(a, b).1?;
                w.write_record([
                    t,
                    est.bands[a].as_str(),
                    est.bands[b].as_str(),
                    &format_f64(prob.prob),
                    &format_f64(prob.ties),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

/// Joint test that all partition bands share the same total connectedness,
/// stacking the consecutive band pairs. Empty when the partition has one band.
///
/// A degenerate test leaves the statistic and decision empty.
pub fn write_joint_tests_csv<W: Write>(
    writer: W,
    manifest_hash: &str,
    panel: &TimeSeriesPanel,
    estimates: &[FocalEstimate],
) -> Result<()> {
    let mut w = start(writer, manifest_hash, &JOINT_TESTS_HEADER)?;
    for est in estimates {
        let n = est.bands.len() - 1;
        if n < 2 {
            continue;
        }
        let pairs: Vec<(&[f64], &[f64])> = (0..n - 1)
            .map(|a| (est.totals[a].as_slice(), est.totals[a + 1].as_slice()))
            .collect();
        let (stat, restrictions, critical, reject) = match stacked_wald(&pairs) {
            Ok(t) => (
                format_f64(t.statistic),
                t.restrictions.to_string(),
                format_f64(t.critical_value_5pct),
                t.reject.to_string(),
            ),
            Err(Error::DegenerateTest(_)) => (String::new(), (n - 1).to_string(), String::new(), String::new()),
            Err(e) => return Err(e),
        };
        w.write_record([
            label(panel, est.focal_time),
            &est.bands[..n].join("|"),
            &stat,
            &restrictions,
            &critical,
            &reject,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

/// One parsed row of a connectedness CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectednessRow {
    pub time_label: String,
    pub band: String,
    pub measure: String,
    pub node: String,
    pub summary: PosteriorSummary,
}

/// Reads a file written by [`write_connectedness_csv`]; returns the manifest hash and rows.
pub fn read_connectedness_csv(text: &str) -> Result<(String, Vec<ConnectednessRow>)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let hash = first
        .strip_prefix("# manifest: ")
        .ok_or_else(|| Error::Schema("missing manifest comment line".into()))?
        .trim()
        .to_string();
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            rec[c].parse().map_err(|_| Error::Parse {
                row: i + 3,
                column: c + 1,
                message: format!("not a number: {:?}", &rec[c]),
            })
        };
        rows.push(ConnectednessRow {
            time_label: rec[0].to_string(),
            band: rec[1].to_string(),
            measure: rec[2].to_string(),
            node: rec[3].to_string(),
            summary: PosteriorSummary {
                median: num(4)?,
                q025: num(5)?,
                q975: num(6)?,
            },
        });
    }
    Ok((hash, rows))
}
