//! JSON and tab-separated report files.
//!
//! Every table is written twice: pretty-printed JSON for programs and TSV for
//! plotting. Missing values are `null` in JSON and `NA` in TSV. Reals use the
//! shortest round-trip representation, so identical results give identical
//! bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use wrse_core::importance::FeatureScore;
use wrse_core::metrics::{AggregateReport, MetricReport};

use crate::error::{CliError, CliResult};

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes through a temporary sibling and a rename, so readers (and resumed
/// sweeps) never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(CliError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(CliError::io(path))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Per-horizon curves: `tau_hours, cal_area, concordant_fraction, pair_count`.
pub fn per_horizon_tsv(report: &MetricReport) -> String {
    let mut s = String::from("tau_hours\tcal_area\tconcordant_fraction\tpair_count\n");
    for r in &report.per_horizon {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            r.tau_hours,
            opt(r.cal_area),
            opt(r.concordant_fraction),
            r.pair_count
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub aggregate: AggregateReport,
}

/// One row per model and metric gamma with mean and standard error.
pub fn summary_tsv(rows: &[ModelSummary]) -> String {
    let mut s = String::from("model\tgamma\tctd_w_mean\tctd_w_se\tcal_w_mean\tcal_w_se\tn_splits\n");
    for m in rows {
        for w in &m.aggregate.weighted {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                m.model, w.gamma, w.ctd_w.mean, w.ctd_w.se, w.cal_w.mean, w.cal_w.se, m.aggregate.n_splits
            );
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub spacing: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub base_learner: String,
    /// Split-mean weighted concordance, one entry per metric gamma.
    pub ctd_w: Vec<GammaValue>,
    /// Split-mean weighted calibration area, one entry per metric gamma.
    pub cal_w: Vec<GammaValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct GammaValue {
    pub gamma: f64,
    pub mean: f64,
    pub se: f64,
}

/// Model label followed by a concordance and a calibration column per gamma.
pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut s = String::from("model");
    if let Some(first) = rows.first() {
        for g in &first.ctd_w {
            let _ = write!(s, "\tctd_w_gamma_{}", g.gamma);
        }
        for g in &first.cal_w {
            let _ = write!(s, "\tcal_w_gamma_{}", g.gamma);
        }
    }
    s.push('\n');
    for r in rows {
        s.push_str(&r.model);
        for g in r.ctd_w.iter().chain(&r.cal_w) {
            let _ = write!(s, "\t{}", g.mean);
        }
        s.push('\n');
    }
    s
}

/// `gamma, feature, score, std`, features in the given (descending) order.
pub fn importance_tsv(summary: &[(f64, Vec<FeatureScore>)]) -> String {
    let mut s = String::from("gamma\tfeature\tscore\tstd\n");
    for (gamma, scores) in summary {
        for f in scores {
            let _ = writeln!(s, "{gamma}\tf{}\t{}\t{}", f.feature, f.mean, f.std);
        }
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, text.as_bytes())
}
