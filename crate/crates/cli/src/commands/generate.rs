use serde::Serialize;
use wrse_core::data::snapshots_of;

use crate::config::Experiment;
use crate::error::{CliError, CliResult};
use crate::pipeline::{hex, load_data};
use crate::{io, parallel, report};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortSummary {
    pub n_stays: usize,
    pub n_features: usize,
    pub n_snapshots: usize,
    pub death_fraction: f64,
    pub median_stay_hours: f64,
    pub seed: u64,
    pub fingerprint: String,
}

impl std::fmt::Display for CohortSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} stays ({} snapshots, {} features), death fraction {:.3}, median stay {:.1} h",
            self.n_stays, self.n_snapshots, self.n_features, self.death_fraction, self.median_stay_hours
        )
    }
}

pub fn run(exp: &Experiment) -> CliResult<CohortSummary> {
    if exp.config.scenario.synth.is_none() {
        return Err(CliError::Config("scenario.synth: `generate` needs a synthetic scenario".into()));
    }
    let pool = parallel::pool(exp.config.runtime.workers)?;
    let data = load_data(exp, &pool)?;
    let ds = &data.dataset;
    let out = &exp.output_dir;
    io::write_dataset(ds, &out.join("stays.csv"), &out.join("features.csv"))?;

    let mut stays: Vec<f64> = ds.stays().iter().map(|s| s.event_time_hours()).collect();
    stays.sort_by(f64::total_cmp);
    let n = stays.len();
    let median = if n % 2 == 1 {
        stays[n / 2]
    } else {
        (stays[n / 2 - 1] + stays[n / 2]) / 2.0
    };
    let deaths = ds.stays().iter().filter(|s| !s.censored()).count();
    let summary = CohortSummary {
        n_stays: n,
        n_features: ds.n_features(),
        n_snapshots: snapshots_of(ds).count(),
        death_fraction: deaths as f64 / n as f64,
        median_stay_hours: median,
        seed: exp.config.runtime.seed,
        fingerprint: hex(&data.fingerprint),
    };
    report::write_json(&out.join("cohort.json"), &summary)?;
    Ok(summary)
}
