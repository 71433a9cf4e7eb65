//! Aggregation of per-run stability files into a per-label summary table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::types::StabilityReport;

/// Stability JSON as written by `analyze`: the report's fields plus the
/// condition label and the producing manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityFile {
    #[serde(flatten)]
    pub report: StabilityReport,
    pub label: Option<String>,
    pub manifest: Option<String>,
}

const UNLABELED: &str = "unlabeled";

type Stat = (&'static str, fn(&StabilityReport) -> Option<f64>);

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.9}"))
}

/// One row per label (sorted): run count, runs with a defined mean shift,
/// then mean and sample SD across runs of each summary statistic.
pub fn summarize(files: &[StabilityFile]) -> String {
    let mut groups: BTreeMap<&str, Vec<&StabilityReport>> = BTreeMap::new();
    for f in files {
        groups
            .entry(f.label.as_deref().unwrap_or(UNLABELED))
            .or_default()
            .push(&f.report);
    }
    let stats: [Stat; 4] = [
        ("mean_shift_ms", |r| r.mean_shift_ms()),
        ("longest_stable_run_s", |r| Some(r.longest_stable_run_s())),
        ("defined_ratio_percent", |r| Some(r.defined_ratio_percent())),
        ("mean_run_duration_ms", |r| Some(r.mean_run_duration_ms())),
    ];

    let mut out = String::from("label,n,n_defined");
    for (name, _) in &stats {
        write!(out, ",{name}_mean,{name}_sd").unwrap();
    }
    out.push('\n');
    for (label, reports) in groups {
        let n_defined = reports
            .iter()
            .filter(|r| r.mean_shift_ms().is_some())
            .count();
        write!(out, "{label},{},{n_defined}", reports.len()).unwrap();
        for (_, get) in &stats {
            let values: Vec<f64> = reports.iter().filter_map(|r| get(r)).collect();
            let (m, s) = mean_sd(&values);
            write!(out, ",{},{}", cell(m), cell(s)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_stability_file(path: &Path) -> Result<StabilityFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
