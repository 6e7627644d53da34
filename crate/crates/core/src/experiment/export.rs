use super::runner::ExperimentResult;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: String,
    pub rms: Option<f64>,
    pub reduction_pct: Option<f64>,
    pub diverged: bool,
    pub seed: u64,
}

/// Rows sorted by scenario, then strategy name.
pub fn summarize(results: &[ExperimentResult]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = results
        .iter()
        .map(|r| SummaryRow {
            scenario: r.scenario.clone(),
            method: r.strategy.clone(),
            rms: r.rms,
            reduction_pct: r.reduction_pct,
            diverged: r.diverged,
            seed: r.seed,
        })
        .collect();
    rows.sort_by(|a, b| (&a.scenario, &a.method).cmp(&(&b.scenario, &b.method)));
    rows
}

pub fn trace_file_name(r: &ExperimentResult) -> String {
    let clean = |s: &str| {
        s.replace(
            |c: char| !(c.is_ascii_alphanumeric() || "._-".contains(c)),
            "_",
        )
    };
    format!("{}__{}.csv", clean(&r.scenario), clean(&r.strategy))
}

/// Writes `summary.json` and one `traces/<scenario>__<strategy>.csv` per result
/// with columns `t,y_d,u,y`. Rows stop where the output stops.
pub fn export_results(results: &[ExperimentResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let traces = dir.join("traces");
    std::fs::create_dir_all(&traces)?;
    let summary = dir.join("summary.json");
    let mut body = serde_json::to_string_pretty(&summarize(results))?;
    body.push('\n');
    std::fs::write(&summary, body)?;
    let mut written = vec![summary];
    for r in results {
        let path = traces.join(trace_file_name(r));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["t", "y_d", "u", "y"])?;
        for (k, &y) in r.y.iter().enumerate() {
            let row = [k as f64 * r.sample_time, r.y_d[k], r.u[k], y];
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Columns `t, y_d, u, y` of an exported trace.
pub fn read_trace(path: &Path) -> Result<[Vec<f64>; 4]> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut cols: [Vec<f64>; 4] = Default::default();
    for rec in rdr.records() {
        let rec = rec?;
        for (i, c) in cols.iter_mut().enumerate() {
            let v = rec
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::invalid(format!("bad trace row in {}", path.display())))?;
            c.push(v);
        }
    }
    Ok(cols)
}
