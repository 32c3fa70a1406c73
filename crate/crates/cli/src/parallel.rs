//! Worker-pool versions of the core's sequential loops.
//!
//! Each unit of work (a horizon, a block of rows, a permutation cell, a stay)
//! is a deterministic function of read-only inputs and results are collected
//! in index order, so the output never depends on the number of workers.

use rayon::prelude::*;
use rayon::ThreadPool;
use wrse_core::data::SnapshotTable;
use wrse_core::importance::{aggregate_importance, horizon_sets, importance_cell, ImportanceConfig, ImportanceReport};
use wrse_core::learners::BaseLearner;
use wrse_core::synth::{generate_stay, Scenario, SyntheticCohort};
use wrse_core::wrse::{fit_horizon, WrseModel};
use wrse_core::{BeyondSupport, Error, HorizonGrid, Matrix, Result, SurvivalCurve};

use crate::error::{CliError, CliResult};

pub fn pool(workers: usize) -> CliResult<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start {workers} workers: {e}")))
}

/// One classifier per horizon, trained concurrently.
pub fn fit_wrse(
    pool: &ThreadPool,
    train: &SnapshotTable,
    valid: &SnapshotTable,
    grid: &HorizonGrid,
    base: &BaseLearner,
) -> Result<WrseModel> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    base.validate()?;
    let classifiers = pool.install(|| {
        (0..grid.len())
            .into_par_iter()
            .map(|k| fit_horizon(train, valid, grid, k, base))
            .collect::<Result<Vec<_>>>()
    })?;
    WrseModel::from_parts(grid.clone(), classifiers, base.clone(), BeyondSupport::Clamp)
}

const ROW_BLOCK: usize = 512;

/// `f(row)` for every row, in row order.
pub fn map_rows<T: Send>(pool: &ThreadPool, x: &Matrix, f: impl Fn(&[f64]) -> Result<T> + Sync) -> Result<Vec<T>> {
    let rows: Vec<&[f64]> = x.iter_rows().collect();
    pool.install(|| {
        rows.par_chunks(ROW_BLOCK)
            .map(|block| block.iter().map(|r| f(r)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
    })
    .map(|blocks| blocks.into_iter().flatten().collect())
}

pub fn predict_wrse(pool: &ThreadPool, model: &WrseModel, x: &Matrix) -> Result<Vec<SurvivalCurve>> {
    if x.rows() > 0 && x.cols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            found: x.cols(),
        });
    }
    map_rows(pool, x, |row| model.predict_cdf(row))
}

/// Permutation importance with every `(horizon, feature, repeat)` cell on
/// its own worker; repeats are averaged in repeat order.
pub fn permutation_importance(
    pool: &ThreadPool,
    model: &WrseModel,
    valid: &SnapshotTable,
    config: &ImportanceConfig,
    seed: u64,
) -> Result<ImportanceReport> {
    config.validate()?;
    let sets = horizon_sets(model, valid)?;
    let (n_k, d, n_r) = (sets.len(), model.n_features(), config.n_repeats);
    let baselines: Vec<f64> = pool.install(|| {
        sets.par_iter()
            .enumerate()
            .map(|(k, s)| model.classifiers()[k].log_loss(s))
            .collect()
    });
    let cells: Vec<f64> = pool.install(|| {
        (0..n_k * d * n_r)
            .into_par_iter()
            .map(|i| {
                let (k, f, r) = (i / (d * n_r), (i / n_r) % d, i % n_r);
                importance_cell(model, &sets[k], baselines[k], k, f, r, seed)
            })
            .collect()
    });
    let per_model = (0..n_k)
        .map(|k| {
            (0..d)
                .map(|f| {
                    let start = (k * d + f) * n_r;
                    cells[start..start + n_r].iter().sum::<f64>() / n_r as f64
                })
                .collect()
        })
        .collect();
    aggregate_importance(model.grid().horizons_hours(), per_model, &config.gammas)
}

/// Synthetic cohort with stays generated concurrently.
pub fn generate(pool: &ThreadPool, scenario: &Scenario, n_stays: usize) -> Result<SyntheticCohort> {
    scenario.validate()?;
    if n_stays == 0 {
        return Err(Error::InvalidConfig("n_stays must be positive".into()));
    }
    let stays = pool.install(|| {
        (0..n_stays)
            .into_par_iter()
            .map(|i| generate_stay(scenario, i))
            .collect::<Result<Vec<_>>>()
    })?;
    SyntheticCohort::from_stays(scenario.clone(), stays)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wrse_core::learners::LogisticConfig;
    use wrse_core::synth;
    use wrse_core::weighting::weighted_horizons;

    #[test]
    fn worker_count_does_not_change_results() {
        let scenario = Scenario::default();
        let one = pool(1).unwrap();
        let three = pool(3).unwrap();
        let cohort = generate(&three, &scenario, 300).unwrap();
        assert_eq!(cohort, synth::generate(&scenario, 300).unwrap());

        let table = SnapshotTable::from_dataset(&cohort.dataset);
        let idx: Vec<usize> = (0..table.len()).collect();
        let (tr, va) = idx.split_at(table.len() * 3 / 4);
        let (train, valid) = (table.subset(tr), table.subset(va));
        let grid = weighted_horizons(0.5, 4).unwrap();
        let base = BaseLearner::Logistic(LogisticConfig::default());
        let a = fit_wrse(&one, &train, &valid, &grid, &base).unwrap();
        let b = fit_wrse(&three, &train, &valid, &grid, &base).unwrap();
        assert_eq!(a, wrse_core::wrse::fit_wrse_tables(&train, &valid, &grid, &base).unwrap());
        assert_eq!(a, b);
        assert_eq!(predict_wrse(&one, &a, &valid.x).unwrap(), predict_wrse(&three, &a, &valid.x).unwrap());
        assert_eq!(
            predict_wrse(&one, &a, &valid.x).unwrap(),
            a.predict_batch(&valid.x).unwrap()
        );

        let cfg = ImportanceConfig {
            n_repeats: 3,
            ..Default::default()
        };
        let seq = wrse_core::importance::permutation_importance(&a, &valid, &cfg, 4).unwrap();
        assert_eq!(permutation_importance(&one, &a, &valid, &cfg, 4).unwrap(), seq);
        assert_eq!(permutation_importance(&three, &a, &valid, &cfg, 4).unwrap(), seq);
    }
}
