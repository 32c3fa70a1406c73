use std::path::Path;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use wrse_core::learners::BaseLearner;
use wrse_core::metrics::{aggregate_splits, evaluate, MetricConfig, MetricReport};
use wrse_core::HorizonGrid;

use crate::commands::eval::wrse_instances;
use crate::config::{grid_for, Experiment, LearnerName, SpacingKind};
use crate::error::{CliResult, Context};
use crate::pipeline::{hex, load_data, splits, SplitData};
use crate::report::{self, GammaValue, SweepRow};
use crate::parallel;

/// One WRSE variant of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub spacing: String,
    pub k: usize,
    pub learner: LearnerName,
    pub grid: HorizonGrid,
    pub base: BaseLearner,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{} K={} {}", self.spacing, self.k, self.learner.as_str())
    }

    fn file_stem(&self) -> String {
        format!("{}_K{}_{}", self.spacing.replace(['(', ')'], ""), self.k, self.learner.as_str())
    }
}

/// Spacing variants × K values × base learners, in that nesting order.
pub fn cells(exp: &Experiment) -> CliResult<Vec<Cell>> {
    let s = &exp.config.sweep;
    let mut spacings = Vec::new();
    for &kind in &s.spacings {
        match kind {
            SpacingKind::Even => spacings.push((kind, "even".to_string(), 0.5)),
            SpacingKind::Weighted => {
                spacings.extend(s.gammas.iter().map(|&g| (kind, format!("weighted({g})"), g)));
            }
        }
    }
    let mut out = Vec::new();
    for (kind, name, gamma) in &spacings {
        for &k in &s.ks {
            for &learner in &s.base_learners {
                out.push(Cell {
                    spacing: name.clone(),
                    k,
                    learner,
                    grid: grid_for(*kind, *gamma, k, s.span_days)?,
                    base: s.base(learner)?,
                });
            }
        }
    }
    Ok(out)
}

/// Everything a cell result depends on; a checkpoint is reused only when
/// its key matches exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CellKey {
    dataset: String,
    split: wrse_core::split::SplitConfig,
    metrics: MetricConfig,
    horizons_hours: Vec<f64>,
    base: BaseLearner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    key: CellKey,
    row: SweepRow,
}

/// Trains and evaluates one cell on every split.
pub fn run_cell(pool: &ThreadPool, cell: &Cell, parts: &[SplitData], metrics: &MetricConfig) -> CliResult<SweepRow> {
    let mut reports: Vec<MetricReport> = Vec::with_capacity(parts.len());
    for s in parts {
        let ctx = || format!("sweep cell {}, split {}", cell.label(), s.index);
        let model = parallel::fit_wrse(pool, &s.train_table, &s.valid_table, &cell.grid, &cell.base).context(ctx)?;
        let inst = wrse_instances(pool, &model, &s.test_table).context(ctx)?;
        reports.push(evaluate(&inst, metrics).context(ctx)?);
    }
    let agg = aggregate_splits(&reports).context(|| format!("sweep cell {}", cell.label()))?;
    let pick = |f: fn(&wrse_core::metrics::AggregatedWeighted) -> wrse_core::metrics::MeanSe| {
        agg.weighted
            .iter()
            .map(|w| {
                let m = f(w);
                GammaValue {
                    gamma: w.gamma,
                    mean: m.mean,
                    se: m.se,
                }
            })
            .collect()
    };
    Ok(SweepRow {
        model: cell.label(),
        spacing: cell.spacing.clone(),
        k: cell.k,
        base_learner: cell.learner.as_str().into(),
        ctd_w: pick(|w| w.ctd_w),
        cal_w: pick(|w| w.cal_w),
    })
}

fn load_checkpoint(path: &Path, key: &CellKey) -> Option<SweepRow> {
    let text = std::fs::read_to_string(path).ok()?;
    let cp: Checkpoint = serde_json::from_str(&text).ok()?;
    (cp.key == *key).then_some(cp.row)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Cells taken from checkpoints of an earlier run.
    pub resumed: usize,
}

/// Runs every cell not already checkpointed, cells in parallel, and writes
/// the table in grid order.
pub fn run(exp: &Experiment) -> CliResult<SweepSummary> {
    let c = &exp.config;
    let pool = parallel::pool(c.runtime.workers)?;
    let data = load_data(exp, &pool)?;
    let parts = splits(exp, &data)?;
    let cells = cells(exp)?;
    let dir = exp.output_dir.join("sweep");
    let jobs: Vec<(&Cell, CellKey, std::path::PathBuf)> = cells
        .iter()
        .map(|cell| {
            let key = CellKey {
                dataset: hex(&data.fingerprint),
                split: c.split.clone(),
                metrics: c.metrics.clone(),
                horizons_hours: cell.grid.horizons_hours().to_vec(),
                base: cell.base.clone(),
            };
            (cell, key, dir.join("cells").join(format!("{}.json", cell.file_stem())))
        })
        .collect();
    let results: Vec<CliResult<(SweepRow, bool)>> = pool.install(|| {
        jobs.par_iter()
            .map(|(cell, key, path)| {
                if let Some(row) = load_checkpoint(path, key) {
                    return Ok((row, true));
                }
                let row = run_cell(&pool, cell, &parts, &c.metrics)?;
                report::write_json(
                    path,
                    &Checkpoint {
                        key: key.clone(),
                        row: row.clone(),
                    },
                )?;
                Ok((row, false))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut resumed = 0;
    for r in results {
        let (row, was_resumed) = r?;
        resumed += was_resumed as usize;
        rows.push(row);
    }
    report::write_json(&dir.join("sweep.json"), &rows)?;
    report::write_text(&dir.join("sweep.tsv"), &report::sweep_tsv(&rows))?;
    Ok(SweepSummary { rows, resumed })
}
