//! Permutation feature importance across the horizon classifiers of a WRSE
//! model, aggregated with decay weights over horizons.
//!
//! A cell `(k, f, r)` permutes feature `f` of the validation rows labeled for
//! horizon `k` and records the increase in that classifier's log-loss. Every
//! cell seeds its own ChaCha8 stream from `(k, f, r)`, so cells can be
//! evaluated in any order or in parallel with identical results.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::SnapshotTable;
use crate::error::{Error, Result};
use crate::learners::{make_horizon_labels, HorizonLabeledSet};
use crate::weighting::weight;
use crate::wrse::WrseModel;
use crate::HOURS_PER_DAY;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ImportanceConfig {
    pub n_repeats: usize,
    pub gammas: Vec<f64>,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        Self {
            n_repeats: 5,
            gammas: alloc::vec![0.3, 0.8],
        }
    }
}

impl ImportanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_repeats == 0 {
            return Err(Error::InvalidConfig("importance: n_repeats must be positive".into()));
        }
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
            return Err(Error::InvalidConfig("importance: gammas must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Validation rows labeled for each horizon of the model.
pub fn horizon_sets(model: &WrseModel, valid: &SnapshotTable) -> Result<Vec<HorizonLabeledSet>> {
    if valid.is_empty() {
        return Err(Error::EmptyInput);
    }
    model
        .grid()
        .horizons_hours()
        .iter()
        .enumerate()
        .map(|(k, &h)| make_horizon_labels(valid, h).map_err(|e| e.at_horizon(k + 1, h)))
        .collect()
}

fn cell_rng(seed: u64, k: usize, f: usize, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 40) | ((f as u64) << 20) | r as u64);
    rng
}

/// Log-loss increase of classifier `k` when feature `f` is shuffled, for repeat `r`.
///
/// `baseline` must be `model.classifiers()[k].log_loss(set)`.
pub fn importance_cell(
    model: &WrseModel,
    set: &HorizonLabeledSet,
    baseline: f64,
    k: usize,
    f: usize,
    r: usize,
    seed: u64,
) -> f64 {
    let mut column = set.x.column(f);
    column.shuffle(&mut cell_rng(seed, k, f, r));
    let mut permuted = set.x.clone();
    permuted.set_column(f, &column);
    let shuffled = HorizonLabeledSet {
        x: permuted,
        labels: set.labels.clone(),
        kept_indices: set.kept_indices.clone(),
    };
    model.classifiers()[k].log_loss(&shuffled) - baseline
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GammaImportance {
    pub gamma: f64,
    /// One score per feature.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImportanceReport {
    pub horizons_hours: Vec<f64>,
    /// `per_model[k][f]`: mean importance over repeats.
    pub per_model: Vec<Vec<f64>>,
    pub weighted: Vec<GammaImportance>,
}

/// `Σ_k w(h_k) imp[k][f] / Σ_k w(h_k)` for each gamma.
pub fn aggregate_importance(horizons_hours: &[f64], per_model: Vec<Vec<f64>>, gammas: &[f64]) -> Result<ImportanceReport> {
    if per_model.len() != horizons_hours.len() {
        return Err(Error::LengthMismatch {
            expected: horizons_hours.len(),
            found: per_model.len(),
        });
    }
    let d = per_model.first().map_or(0, Vec::len);
    let mut weighted = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let w: Vec<f64> = horizons_hours
            .iter()
            .map(|h| weight(gamma, h / HOURS_PER_DAY))
            .collect::<Result<_>>()?;
        let total: f64 = w.iter().sum();
        let scores = (0..d)
            .map(|f| per_model.iter().zip(&w).map(|(imp, wk)| wk * imp[f]).sum::<f64>() / total)
            .collect();
        weighted.push(GammaImportance { gamma, scores });
    }
    Ok(ImportanceReport {
        horizons_hours: horizons_hours.to_vec(),
        per_model,
        weighted,
    })
}

/// Sequential reference implementation.
pub fn permutation_importance(
    model: &WrseModel,
    valid: &SnapshotTable,
    config: &ImportanceConfig,
    seed: u64,
) -> Result<ImportanceReport> {
    config.validate()?;
    let sets = horizon_sets(model, valid)?;
    let d = model.n_features();
    let mut per_model = Vec::with_capacity(sets.len());
    for (k, set) in sets.iter().enumerate() {
        let baseline = model.classifiers()[k].log_loss(set);
        let row = (0..d)
            .map(|f| {
                (0..config.n_repeats)
                    .map(|r| importance_cell(model, set, baseline, k, f, r, seed))
                    .sum::<f64>()
                    / config.n_repeats as f64
            })
            .collect();
        per_model.push(row);
    }
    aggregate_importance(model.grid().horizons_hours(), per_model, &config.gammas)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureScore {
    pub feature: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation across split reports, per gamma,
/// sorted by descending mean (ties by feature index).
pub fn summarize_splits(reports: &[ImportanceReport]) -> Result<Vec<(f64, Vec<FeatureScore>)>> {
    let first = reports.first().ok_or(Error::EmptyInput)?;
    let mut out = Vec::with_capacity(first.weighted.len());
    for (g, gi) in first.weighted.iter().enumerate() {
        let d = gi.scores.len();
        let mut scores = Vec::with_capacity(d);
        for f in 0..d {
            let vals: Vec<f64> = reports
                .iter()
                .map(|r| {
                    r.weighted
                        .get(g)
                        .and_then(|w| w.scores.get(f))
                        .copied()
                        .ok_or_else(|| Error::InvalidData("importance reports differ in shape".into()))
                })
                .collect::<Result<_>>()?;
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let std = if vals.len() > 1 {
                libm::sqrt(vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
            } else {
                0.0
            };
            scores.push(FeatureScore { feature: f, mean, std });
        }
        scores.sort_by(|a, b| b.mean.total_cmp(&a.mean).then(a.feature.cmp(&b.feature)));
        out.push((gi.gamma, scores));
    }
    Ok(out)
}
