use rayon::ThreadPool;
use serde::Serialize;
use wrse_core::data::{snapshots_of, SnapshotTable};
use wrse_core::metrics::{aggregate_splits, evaluate, EvalInstance, MetricReport};
use wrse_core::parametric::{Head, ParametricModel};
use wrse_core::recalibration::CurveRecalibrator;
use wrse_core::synth::{random_scores, AntiOracle, ConstantCurve, OracleCurve, RandomScore, SyntheticCohort};
use wrse_core::wrse::WrseModel;
use wrse_core::{Dataset, Result, SurvivalCurve, SurvivalFn};

use crate::archive::{decode_parametric, decode_wrse};
use crate::config::{Experiment, ReferencePredictor};
use crate::error::{CliResult, Context};
use crate::pipeline::{check_provenance, load_data, model_path, read_archive, report_path, splits, Data};
use crate::report::{self, ModelSummary};
use crate::parallel;

fn instances<C>(curves: Vec<C>, table: &SnapshotTable) -> Vec<EvalInstance<C>> {
    curves
        .into_iter()
        .zip(table.y_hours.iter().zip(&table.censored))
        .map(|(c, (&y, &cens))| EvalInstance::new(c, y, cens))
        .collect()
}

pub fn wrse_instances(pool: &ThreadPool, model: &WrseModel, table: &SnapshotTable) -> Result<Vec<EvalInstance<SurvivalCurve>>> {
    Ok(instances(parallel::predict_wrse(pool, model, &table.x)?, table))
}

pub fn parametric_instances(pool: &ThreadPool, model: &ParametricModel, table: &SnapshotTable) -> Result<Vec<EvalInstance<Head>>> {
    Ok(instances(parallel::map_rows(pool, &table.x, |x| model.predict_head(x))?, table))
}

/// Maps fitted on validation instances, applied to test instances.
pub fn recalibrate<C: SurvivalFn + Sync>(
    pool: &ThreadPool,
    valid: &[EvalInstance<C>],
    test: &[EvalInstance<C>],
    knots: &[f64],
) -> Result<Vec<EvalInstance<SurvivalCurve>>> {
    use rayon::prelude::*;
    let recal = CurveRecalibrator::fit(valid, knots)?;
    pool.install(|| {
        test.par_iter()
            .map(|i| Ok(EvalInstance::new(recal.apply(&i.curve)?, i.y_hours, i.censored)))
            .collect()
    })
}

/// Predictors built from the generating scenario rather than trained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Oracle(OracleCurve),
    AntiOracle(AntiOracle<OracleCurve>),
    Random(RandomScore),
    Constant(ConstantCurve),
}

impl SurvivalFn for Reference {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        match self {
            Reference::Oracle(c) => c.cdf_at(tau_hours),
            Reference::AntiOracle(c) => c.cdf_at(tau_hours),
            Reference::Random(c) => c.cdf_at(tau_hours),
            Reference::Constant(c) => c.cdf_at(tau_hours),
        }
    }
}

/// Reference predictions for every snapshot of `test`. The random predictor
/// draws from `seed`.
pub fn reference_instances(
    kind: ReferencePredictor,
    cohort: &SyntheticCohort,
    test: &Dataset,
    seed: u64,
    constant_cdf: f64,
) -> Result<Vec<EvalInstance<Reference>>> {
    let snaps: Vec<_> = snapshots_of(test).collect();
    let randoms = match kind {
        ReferencePredictor::Random => random_scores(seed, snaps.len()),
        _ => Vec::new(),
    };
    snaps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let curve = match kind {
                ReferencePredictor::Oracle => Reference::Oracle(cohort.oracle_curve(s)?),
                ReferencePredictor::AntiOracle => Reference::AntiOracle(AntiOracle(cohort.oracle_curve(s)?)),
                ReferencePredictor::Random => Reference::Random(randoms[i]),
                ReferencePredictor::Constant => Reference::Constant(ConstantCurve(constant_cdf)),
            };
            Ok(EvalInstance::new(curve, s.y_hours, s.censored))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub models: Vec<ModelSummary>,
}

fn write_split(exp: &Experiment, model: &str, split: usize, r: &MetricReport) -> CliResult<()> {
    report::write_json(&report_path(&exp.output_dir, model, split, "json"), r)?;
    report::write_text(&report_path(&exp.output_dir, model, split, "tsv"), &report::per_horizon_tsv(r))
}

/// Evaluates every configured model (and reference predictor) on the test
/// part of every split; writes per-split reports and the cross-split summary.
pub fn run(exp: &Experiment) -> CliResult<EvalSummary> {
    let c = &exp.config;
    let pool = parallel::pool(c.runtime.workers)?;
    let data = load_data(exp, &pool)?;
    let parts = splits(exp, &data)?;
    let mut names: Vec<String> = Vec::new();
    if c.models.wrse.is_some() {
        names.push("wrse".into());
    }
    if c.models.parametric.is_some() {
        names.push("parametric".into());
        names.push("parametric_uncalibrated".into());
    }
    names.extend(c.eval.reference_predictors.iter().map(|r| r.as_str().to_string()));
    let mut reports: Vec<Vec<MetricReport>> = vec![Vec::new(); names.len()];

    for s in &parts {
        let mut slot = 0;
        let mut push = |reports: &mut Vec<Vec<MetricReport>>, r: MetricReport| -> CliResult<()> {
            write_split(exp, &names[slot], s.index, &r)?;
            reports[slot].push(r);
            slot += 1;
            Ok(())
        };
        let ctx = |what: &str| format!("split {}: evaluating {what}", s.index);
        if c.models.wrse.is_some() {
            let model = load_wrse(exp, &data, s.index)?;
            let inst = wrse_instances(&pool, &model, &s.test_table).context(|| ctx("wrse"))?;
            push(&mut reports, evaluate(&inst, &c.metrics).context(|| ctx("wrse"))?)?;
        }
        if c.models.parametric.is_some() {
            let model = load_parametric(exp, &data, s.index)?;
            let valid = parametric_instances(&pool, &model, &s.valid_table).context(|| ctx("parametric"))?;
            let test = parametric_instances(&pool, &model, &s.test_table).context(|| ctx("parametric"))?;
            let fixed = recalibrate(&pool, &valid, &test, &c.eval.recalibration_knots_hours)
                .context(|| ctx("parametric recalibration"))?;
            push(&mut reports, evaluate(&fixed, &c.metrics).context(|| ctx("parametric"))?)?;
            push(&mut reports, evaluate(&test, &c.metrics).context(|| ctx("parametric"))?)?;
        }
        if let Some(cohort) = &data.cohort {
            for &kind in &c.eval.reference_predictors {
                let seed = c.runtime.seed.wrapping_add(s.index as u64);
                let inst = reference_instances(kind, cohort, &s.test, seed, c.eval.constant_cdf)
                    .context(|| ctx(kind.as_str()))?;
                push(&mut reports, evaluate(&inst, &c.metrics).context(|| ctx(kind.as_str()))?)?;
            }
        }
    }

    let models = names
        .into_iter()
        .zip(&reports)
        .map(|(model, rs)| {
            let aggregate = aggregate_splits(rs).context(|| format!("aggregating {model}"))?;
            Ok(ModelSummary { model, aggregate })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let summary = EvalSummary { models };
    report::write_json(&exp.output_dir.join("reports/summary.json"), &summary)?;
    report::write_text(&exp.output_dir.join("reports/summary.tsv"), &report::summary_tsv(&summary.models))?;
    Ok(summary)
}

pub fn load_wrse(exp: &Experiment, data: &Data, split: usize) -> CliResult<WrseModel> {
    let path = model_path(&exp.output_dir, split, "wrse");
    let (model, prov) = decode_wrse(&read_archive(&path)?)?;
    check_provenance(&path, prov, data, split)?;
    Ok(model)
}

fn load_parametric(exp: &Experiment, data: &Data, split: usize) -> CliResult<ParametricModel> {
    let path = model_path(&exp.output_dir, split, "parametric");
    let (model, _, prov) = decode_parametric(&read_archive(&path)?)?;
    check_provenance(&path, prov, data, split)?;
    Ok(model)
}
