use serde::Serialize;
use wrse_core::importance::{summarize_splits, FeatureScore, ImportanceReport};

use crate::commands::eval::load_wrse;
use crate::config::Experiment;
use crate::error::{CliError, CliResult, Context};
use crate::pipeline::{load_data, splits};
use crate::{parallel, report};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSummary {
    pub gamma: f64,
    /// Sorted by descending mean score.
    pub features: Vec<FeatureScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceSummary {
    pub n_repeats: usize,
    pub seed: u64,
    pub summary: Vec<GammaSummary>,
    pub splits: Vec<ImportanceReport>,
}

/// Permutation importance of the trained WRSE models on each validation split.
pub fn run(exp: &Experiment) -> CliResult<ImportanceSummary> {
    let c = &exp.config;
    if c.models.wrse.is_none() {
        return Err(CliError::Config("models.wrse: importance needs a WRSE model".into()));
    }
    let pool = parallel::pool(c.runtime.workers)?;
    let data = load_data(exp, &pool)?;
    let mut reports = Vec::new();
    for s in splits(exp, &data)? {
        let model = load_wrse(exp, &data, s.index)?;
        let r = parallel::permutation_importance(&pool, &model, &s.valid_table, &c.importance, c.runtime.seed)
            .context(|| format!("split {}: importance", s.index))?;
        reports.push(r);
    }
    let summary = summarize_splits(&reports)
        .context(|| "summarizing importance".into())?
        .into_iter()
        .map(|(gamma, features)| GammaSummary { gamma, features })
        .collect::<Vec<_>>();
    let table: Vec<(f64, Vec<FeatureScore>)> = summary.iter().map(|g| (g.gamma, g.features.clone())).collect();
    let out = ImportanceSummary {
        n_repeats: c.importance.n_repeats,
        seed: c.runtime.seed,
        summary,
        splits: reports,
    };
    report::write_json(&exp.output_dir.join("importance.json"), &out)?;
    report::write_text(&exp.output_dir.join("importance.tsv"), &report::importance_tsv(&table))?;
    Ok(out)
}
