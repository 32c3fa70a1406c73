//! Data loading, temporal splits and the on-disk layout shared by commands.
//!
//! ```text
//! <out>/stays.csv, features.csv, cohort.json     generate
//! <out>/models/split<i>/{wrse,parametric}.bin    train
//! <out>/timings.json, timings.tsv                train
//! <out>/reports/<model>/split<i>.{json,tsv}      eval
//! <out>/reports/summary.{json,tsv}               eval
//! <out>/sweep/cells/<cell>.json, sweep.{json,tsv} sweep
//! <out>/importance.{json,tsv}                    importance
//! ```

use std::path::{Path, PathBuf};

use rayon::ThreadPool;
use wrse_core::data::SnapshotTable;
use wrse_core::split::{apply_split, temporal_splits};
use wrse_core::synth::SyntheticCohort;
use wrse_core::Dataset;

use crate::archive::{self, Provenance};
use crate::config::Experiment;
use crate::error::{CliError, CliResult, Context};
use crate::{io, parallel};

pub struct Data {
    pub dataset: Dataset,
    /// Present for synthetic scenarios; enables the reference predictors.
    pub cohort: Option<SyntheticCohort>,
    pub fingerprint: [u8; 32],
}

pub fn load_data(exp: &Experiment, pool: &ThreadPool) -> CliResult<Data> {
    let c = &exp.config;
    let (dataset, cohort) = match (&c.scenario.synth, &c.scenario.files) {
        (Some(s), _) => {
            let cohort = parallel::generate(pool, &s.scenario(c.runtime.seed), s.n_stays)
                .context(|| "generating the synthetic cohort".into())?;
            (cohort.dataset.clone(), Some(cohort))
        }
        (None, Some(f)) => (io::read_dataset(&f.stays, &f.features)?, None),
        (None, None) => return Err(CliError::Config("scenario: no data source".into())),
    };
    if dataset.is_empty() {
        return Err(CliError::Data("the dataset holds no stays".into()));
    }
    let fingerprint = archive::fingerprint(&dataset);
    Ok(Data {
        dataset,
        cohort,
        fingerprint,
    })
}

pub struct SplitData {
    pub index: usize,
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
    pub train_table: SnapshotTable,
    pub valid_table: SnapshotTable,
    pub test_table: SnapshotTable,
}

pub fn splits(exp: &Experiment, data: &Data) -> CliResult<Vec<SplitData>> {
    let splits = temporal_splits(data.dataset.len(), &exp.config.split)
        .map_err(|e| CliError::Config(format!("split: {e}")))?;
    splits
        .iter()
        .map(|s| {
            let (train, valid, test) = apply_split(&data.dataset, s).context(|| format!("split {}", s.index))?;
            Ok(SplitData {
                index: s.index,
                train_table: SnapshotTable::from_dataset(&train),
                valid_table: SnapshotTable::from_dataset(&valid),
                test_table: SnapshotTable::from_dataset(&test),
                train,
                valid,
                test,
            })
        })
        .collect()
}

pub fn model_path(out: &Path, split: usize, model: &str) -> PathBuf {
    out.join("models").join(format!("split{split}")).join(format!("{model}.bin"))
}

pub fn report_path(out: &Path, model: &str, split: usize, ext: &str) -> PathBuf {
    out.join("reports").join(model).join(format!("split{split}.{ext}"))
}

pub fn read_archive(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        CliError::Runtime(format!("cannot read model archive {} ({e}); run `wrse train` first", path.display()))
    })
}

/// Rejects archives trained on other data or another split.
pub fn check_provenance(path: &Path, found: Provenance, data: &Data, split: usize) -> CliResult<()> {
    if found.dataset != data.fingerprint {
        return Err(CliError::Data(format!(
            "{} was trained on a different dataset",
            path.display()
        )));
    }
    if found.split != split as u64 {
        return Err(CliError::Data(format!(
            "{} belongs to split {}, expected split {split}",
            path.display(),
            found.split
        )));
    }
    Ok(())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
