use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use wrse_core::parametric::train_parametric;

use crate::archive::{encode_parametric, encode_wrse, Provenance};
use crate::config::Experiment;
use crate::error::{CliError, CliResult, Context};
use crate::pipeline::{load_data, model_path, splits};
use crate::{parallel, report};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitTiming {
    pub split: usize,
    /// Wall-clock seconds with `workers` workers.
    pub wrse_seconds: Option<f64>,
    /// Wall-clock seconds with one worker (benchmark mode only).
    pub wrse_sequential_seconds: Option<f64>,
    pub parametric_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub workers: usize,
    pub available_parallelism: usize,
    pub splits: Vec<SplitTiming>,
}

impl Timings {
    pub fn tsv(&self) -> String {
        let mut s = String::from("split\tmodel\tworkers\tseconds\n");
        for t in &self.splits {
            let rows = [
                ("wrse", self.workers, t.wrse_seconds),
                ("wrse", 1, t.wrse_sequential_seconds),
                ("parametric", 1, t.parametric_seconds),
            ];
            for (model, w, secs) in rows {
                if let Some(secs) = secs {
                    let _ = writeln!(s, "{}\t{model}\t{w}\t{secs}", t.split);
                }
            }
        }
        s
    }
}

/// Trains every configured model on every split and writes the archives.
/// Wall-clock times go to `timings.json`, never into the archives.
pub fn run(exp: &Experiment) -> CliResult<Timings> {
    let c = &exp.config;
    if c.models.wrse.is_none() && c.models.parametric.is_none() {
        return Err(CliError::Config("models: no model configured".into()));
    }
    let pool = parallel::pool(c.runtime.workers)?;
    let data = load_data(exp, &pool)?;
    let wrse = c.models.wrse.as_ref().map(|w| Ok::<_, CliError>((w.grid()?, w.base()?))).transpose()?;
    let parametric = c.models.parametric.as_ref().map(|p| p.config()).transpose()?;
    let sequential = if c.runtime.benchmark && c.runtime.workers > 1 {
        Some(parallel::pool(1)?)
    } else {
        None
    };

    let mut timings = Vec::new();
    for s in splits(exp, &data)? {
        let prov = Provenance {
            dataset: data.fingerprint,
            split: s.index as u64,
        };
        let mut t = SplitTiming {
            split: s.index,
            wrse_seconds: None,
            wrse_sequential_seconds: None,
            parametric_seconds: None,
        };
        if let Some((grid, base)) = &wrse {
            let start = Instant::now();
            let model = parallel::fit_wrse(&pool, &s.train_table, &s.valid_table, grid, base)
                .context(|| format!("split {}: training wrse", s.index))?;
            t.wrse_seconds = Some(start.elapsed().as_secs_f64());
            if let Some(seq) = &sequential {
                let start = Instant::now();
                let again = parallel::fit_wrse(seq, &s.train_table, &s.valid_table, grid, base)
                    .context(|| format!("split {}: training wrse with one worker", s.index))?;
                t.wrse_sequential_seconds = Some(start.elapsed().as_secs_f64());
                if again != model {
                    return Err(CliError::Runtime(format!(
                        "split {}: sequential and parallel wrse fits differ",
                        s.index
                    )));
                }
            }
            report::write_atomic(&model_path(&exp.output_dir, s.index, "wrse"), &encode_wrse(&model, prov))?;
        }
        if let Some(cfg) = &parametric {
            let start = Instant::now();
            let model = train_parametric(&s.train_table, &s.valid_table, cfg)
                .context(|| format!("split {}: training parametric", s.index))?;
            t.parametric_seconds = Some(start.elapsed().as_secs_f64());
            report::write_atomic(
                &model_path(&exp.output_dir, s.index, "parametric"),
                &encode_parametric(&model, Some(cfg), prov),
            )?;
        }
        timings.push(t);
    }
    let timings = Timings {
        workers: c.runtime.workers,
        available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        splits: timings,
    };
    report::write_json(&exp.output_dir.join("timings.json"), &timings)?;
    report::write_text(&exp.output_dir.join("timings.tsv"), &timings.tsv())?;
    Ok(timings)
}
