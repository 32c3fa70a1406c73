//! Synthetic censored cohorts whose true conditional survival is known in
//! closed form.
//!
//! Each stay draws from its own ChaCha8 stream (`seed`, stream = stay index),
//! so any subset of stays can be regenerated independently and the cohort
//! does not depend on how generation is scheduled.
//!
//! Event times are `min(death, discharge)` rounded up to the next half hour
//! (`ceil(e - 0.5) + 0.5`), which keeps them off the whole-hour snapshot grid.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::curve::SurvivalFn;
use crate::data::{Dataset, Snapshot, StayRecord};
use crate::error::{Error, Result};
use crate::math::{exp, expm1, log, log1p, pow};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", deny_unknown_fields))]
pub enum ScenarioKind {
    /// `h(t | x) = baseline_rate * exp(beta . x)`, features fixed per stay.
    ExponentialPh { baseline_rate: f64 },
    /// `S(t | x) = exp(-(t / scale)^shape)^{exp(beta . x)}`, features fixed per stay.
    WeibullPh { shape: f64, scale_hours: f64 },
    /// `x_t = x_0 + (t / 24) v` with a per-stay drift `v ~ N(0, drift_sd²)`,
    /// and `h(t) = baseline_rate * exp(beta . x_t)`.
    TimeVaryingHazard { baseline_rate: f64, drift_sd: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// One coefficient per feature.
    pub beta: Vec<f64>,
    /// Exponential discharge rate per hour; 0 disables censoring.
    pub censoring_rate: f64,
    /// Administrative end of follow-up, counted as censoring.
    pub max_stay_hours: Option<f64>,
    pub seed: u64,
}

impl Default for Scenario {
    /// Exponential hazards with mean survival 72 h at `x = 0`, discharge at
    /// rate 1/720 h, five features of decreasing effect (the last inert).
    fn default() -> Self {
        Self {
            kind: ScenarioKind::ExponentialPh {
                baseline_rate: 1.0 / 72.0,
            },
            beta: alloc::vec![0.8, -0.6, 0.4, 0.2, 0.0],
            censoring_rate: 1.0 / 720.0,
            max_stay_hours: None,
            seed: 0,
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(alloc::format!("scenario: {what} must be positive, got {v}")))
    }
}

impl Scenario {
    pub fn n_features(&self) -> usize {
        self.beta.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_empty() {
            return Err(Error::InvalidConfig("scenario: beta must have at least one entry".into()));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidConfig("scenario: beta must be finite".into()));
        }
        match self.kind {
            ScenarioKind::ExponentialPh { baseline_rate } => positive("baseline_rate", baseline_rate)?,
            ScenarioKind::WeibullPh { shape, scale_hours } => {
                positive("shape", shape)?;
                positive("scale_hours", scale_hours)?;
            }
            ScenarioKind::TimeVaryingHazard { baseline_rate, drift_sd } => {
                positive("baseline_rate", baseline_rate)?;
                if !(drift_sd >= 0.0 && drift_sd.is_finite()) {
                    return Err(Error::InvalidConfig("scenario: drift_sd must be nonnegative".into()));
                }
            }
        }
        if !(self.censoring_rate >= 0.0 && self.censoring_rate.is_finite()) {
            return Err(Error::InvalidConfig("scenario: censoring_rate must be nonnegative".into()));
        }
        if let Some(m) = self.max_stay_hours {
            positive("max_stay_hours", m)?;
        }
        Ok(())
    }

    fn has_drift(&self) -> bool {
        matches!(self.kind, ScenarioKind::TimeVaryingHazard { .. })
    }
}

/// Per-stay latent draws needed to reconstruct the true survival.
#[derive(Debug, Clone, PartialEq)]
pub struct StayLatent {
    pub x0: Vec<f64>,
    /// Feature drift per day; empty for time-constant scenarios.
    pub drift: Vec<f64>,
    pub death_hours: f64,
    pub discharge_hours: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub scenario: Scenario,
    pub dataset: Dataset,
    pub latents: Vec<StayLatent>,
    index: BTreeMap<String, usize>,
}

/// Half-hour quantization of event times.
pub fn quantize_event_time(e: f64) -> f64 {
    libm::ceil(e - 0.5) + 0.5
}

pub fn stay_id(i: usize) -> String {
    alloc::format!("s{i:06}")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Time at which the cumulative hazard `A (e^{κt} - 1) / κ` reaches `e`;
/// infinite when it never does.
fn invert_exp_hazard(a: f64, kappa: f64, e: f64) -> f64 {
    if kappa.abs() < 1e-14 {
        return e / a;
    }
    let arg = kappa * e / a;
    if arg <= -1.0 {
        return f64::INFINITY;
    }
    log1p(arg) / kappa
}

fn draw_stay(scenario: &Scenario, i: usize) -> StayLatent {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(i as u64);
    let d = scenario.n_features();
    let x0: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let drift: Vec<f64> = match scenario.kind {
        ScenarioKind::TimeVaryingHazard { drift_sd, .. } => (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                drift_sd * z
            })
            .collect(),
        _ => Vec::new(),
    };
    // unit-rate exponential for the death clock
    let u: f64 = rng.random();
    let e = -log(1.0 - u);
    let eta = dot(&scenario.beta, &x0);
    let death = match scenario.kind {
        ScenarioKind::ExponentialPh { baseline_rate } => e / (baseline_rate * exp(eta)),
        ScenarioKind::WeibullPh { shape, scale_hours } => scale_hours * pow(e / exp(eta), 1.0 / shape),
        ScenarioKind::TimeVaryingHazard { baseline_rate, .. } => {
            let kappa = dot(&scenario.beta, &drift) / 24.0;
            invert_exp_hazard(baseline_rate * exp(eta), kappa, e)
        }
    };
    let discharge = if scenario.censoring_rate > 0.0 {
        let v: f64 = rng.random();
        -log(1.0 - v) / scenario.censoring_rate
    } else {
        f64::INFINITY
    };
    StayLatent {
        x0,
        drift,
        death_hours: death,
        discharge_hours: discharge,
    }
}

fn features_at(latent: &StayLatent, t: f64) -> Vec<f64> {
    if latent.drift.is_empty() {
        return latent.x0.clone();
    }
    latent
        .x0
        .iter()
        .zip(&latent.drift)
        .map(|(x, v)| x + (t / 24.0) * v)
        .collect()
}

fn build_stay(scenario: &Scenario, i: usize, latent: &StayLatent) -> Result<StayRecord> {
    let mut end = latent.death_hours.min(latent.discharge_hours);
    let mut censored = latent.discharge_hours < latent.death_hours;
    if let Some(m) = scenario.max_stay_hours {
        if end > m {
            end = m;
            censored = true;
        }
    }
    if !end.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "scenario: stay {i} never ends; set censoring_rate or max_stay_hours"
        )));
    }
    let event = quantize_event_time(end);
    let rows = if scenario.has_drift() {
        libm::ceil(event) as usize
    } else {
        1
    };
    let d = scenario.n_features();
    let mut features = Matrix::zeros(rows, d);
    for r in 0..rows {
        for (j, v) in features_at(latent, r as f64).into_iter().enumerate() {
            features.set(r, j, v);
        }
    }
    StayRecord::new(stay_id(i), features, event, censored)
}

/// Draws stay `i` of the cohort; stays are independent of one another.
pub fn generate_stay(scenario: &Scenario, i: usize) -> Result<(StayRecord, StayLatent)> {
    let latent = draw_stay(scenario, i);
    let stay = build_stay(scenario, i, &latent)?;
    Ok((stay, latent))
}

impl SyntheticCohort {
    /// Assembles a cohort from stays produced by [`generate_stay`] in index order.
    pub fn from_stays(scenario: Scenario, stays: Vec<(StayRecord, StayLatent)>) -> Result<Self> {
        let (records, latents): (Vec<_>, Vec<_>) = stays.into_iter().unzip();
        let index = records
            .iter()
            .enumerate()
            .map(|(i, s)| (s.stay_id.clone(), i))
            .collect();
        Ok(Self {
            scenario,
            dataset: Dataset::new(records, None)?,
            latents,
            index,
        })
    }

    pub fn latent(&self, stay_id: &str) -> Option<&StayLatent> {
        self.index.get(stay_id).map(|&i| &self.latents[i])
    }

    /// True conditional survival of a snapshot, given survival up to `t`.
    pub fn oracle_curve(&self, snapshot: &Snapshot<'_>) -> Result<OracleCurve> {
        self.oracle_at(snapshot.stay_id, snapshot.t_hours, snapshot.x)
    }

    pub fn oracle_at(&self, stay_id: &str, t_hours: f64, x: &[f64]) -> Result<OracleCurve> {
        let latent = self
            .latent(stay_id)
            .ok_or_else(|| Error::ScenarioMismatch(alloc::format!("unknown stay {stay_id}")))?;
        if x.len() != self.scenario.n_features() {
            return Err(Error::ScenarioMismatch(alloc::format!(
                "stay {stay_id}: {} features, scenario has {}",
                x.len(),
                self.scenario.n_features()
            )));
        }
        // snapshots past the last feature row carry it forward
        let row_t = if latent.drift.is_empty() { 0.0 } else { t_hours };
        if features_at(latent, row_t).as_slice() != x {
            return Err(Error::ScenarioMismatch(alloc::format!(
                "stay {stay_id}: features at t={t_hours} differ from the generated ones"
            )));
        }
        let eta = dot(&self.scenario.beta, &latent.x0);
        Ok(match self.scenario.kind {
            ScenarioKind::ExponentialPh { baseline_rate } => OracleCurve::Exponential {
                rate: baseline_rate * exp(eta),
            },
            ScenarioKind::WeibullPh { shape, scale_hours } => OracleCurve::Weibull {
                shape,
                scale_hours,
                risk: exp(eta),
                t_hours,
            },
            ScenarioKind::TimeVaryingHazard { baseline_rate, .. } => {
                let kappa = dot(&self.scenario.beta, &latent.drift) / 24.0;
                OracleCurve::TimeVarying {
                    hazard_at_t: baseline_rate * exp(eta + kappa * t_hours),
                    kappa,
                }
            }
        })
    }
}

pub fn generate(scenario: &Scenario, n_stays: usize) -> Result<SyntheticCohort> {
    scenario.validate()?;
    if n_stays == 0 {
        return Err(Error::InvalidConfig("n_stays must be positive".into()));
    }
    let stays = (0..n_stays)
        .map(|i| generate_stay(scenario, i))
        .collect::<Result<Vec<_>>>()?;
    SyntheticCohort::from_stays(scenario.clone(), stays)
}

/// Closed-form `S(τ | alive at t, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleCurve {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale_hours: f64, risk: f64, t_hours: f64 },
    /// Hazard `hazard_at_t * e^{κ τ}` from the snapshot on.
    TimeVarying { hazard_at_t: f64, kappa: f64 },
}

impl OracleCurve {
    /// Cumulative hazard accrued over `(t, t + τ]`.
    pub fn cumulative_hazard(&self, tau: f64) -> f64 {
        match *self {
            OracleCurve::Exponential { rate } => rate * tau,
            OracleCurve::Weibull {
                shape,
                scale_hours,
                risk,
                t_hours,
            } => risk * (pow((t_hours + tau) / scale_hours, shape) - pow(t_hours / scale_hours, shape)),
            OracleCurve::TimeVarying { hazard_at_t, kappa } => {
                if kappa.abs() < 1e-14 {
                    hazard_at_t * tau
                } else {
                    hazard_at_t * expm1(kappa * tau) / kappa
                }
            }
        }
    }
}

impl SurvivalFn for OracleCurve {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        if !(tau_hours >= 0.0) {
            return Err(Error::domain("tau_hours", tau_hours));
        }
        Ok((-expm1(-self.cumulative_hazard(tau_hours))).clamp(0.0, 1.0))
    }
}

/// Reference predictor with `S'(τ) = 1 - S(τ)`: reverses every ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiOracle<C>(pub C);

impl<C: SurvivalFn> SurvivalFn for AntiOracle<C> {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        Ok(1.0 - self.0.cdf_at(tau_hours)?)
    }
}

/// `S(τ) = exp(-rate τ)` with a rate unrelated to the instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomScore {
    pub rate: f64,
}

impl SurvivalFn for RandomScore {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        Ok(-expm1(-self.rate * tau_hours))
    }
}

/// `n` random-score predictors with rates uniform on `[0.001, 0.1)` per hour.
pub fn random_scores(seed: u64, n: usize) -> Vec<RandomScore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| RandomScore {
            rate: rng.random_range(0.001..0.1),
        })
        .collect()
}

/// The same CDF value at every horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCurve(pub f64);

impl SurvivalFn for ConstantCurve {
    fn cdf_at(&self, _tau_hours: f64) -> Result<f64> {
        Ok(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::snapshots_of;
    use proptest::prelude::*;

    fn exp_scenario(beta: Vec<f64>, censoring_rate: f64) -> Scenario {
        Scenario {
            kind: ScenarioKind::ExponentialPh { baseline_rate: 1.0 / 24.0 },
            beta,
            censoring_rate,
            max_stay_hours: None,
            seed: 11,
        }
    }

    #[test]
    fn null_effect_gives_baseline_mean() {
        let s = exp_scenario(alloc::vec![0.0, 0.0], 0.0);
        let c = generate(&s, 10_000).unwrap();
        let deaths: Vec<f64> = c.latents.iter().map(|l| l.death_hours).collect();
        let n = deaths.len() as f64;
        let mean = deaths.iter().sum::<f64>() / n;
        // standard error of an exponential mean is mean / sqrt(n)
        assert!((mean - 24.0).abs() < 3.0 * 24.0 / n.sqrt(), "mean {mean}");
        assert!(c.dataset.stays().iter().all(|s| !s.censored()));
    }

    #[test]
    fn same_seed_same_cohort() {
        let s = Scenario::default();
        assert_eq!(generate(&s, 50).unwrap(), generate(&s, 50).unwrap());
        let other = Scenario { seed: 1, ..Scenario::default() };
        assert_ne!(generate(&s, 50).unwrap().dataset, generate(&other, 50).unwrap().dataset);
    }

    #[test]
    fn stays_do_not_depend_on_cohort_size() {
        let s = Scenario::default();
        let small = generate(&s, 10).unwrap();
        let large = generate(&s, 30).unwrap();
        assert_eq!(small.dataset.stays(), &large.dataset.stays()[..10]);
    }

    #[test]
    fn oracle_examples() {
        let s = exp_scenario(alloc::vec![0.0], 0.01);
        let c = generate(&s, 5).unwrap();
        let snap = snapshots_of(&c.dataset).next().unwrap();
        let o = c.oracle_curve(&snap).unwrap();
        assert!((o.survival_at(24.0).unwrap() - 0.367_879_441_171_442_33).abs() < 1e-15);
        assert_eq!(o.survival_at(0.0).unwrap(), 1.0);
        assert!(matches!(c.oracle_at("nope", 0.0, &[0.0]), Err(Error::ScenarioMismatch(_))));
        assert!(matches!(c.oracle_at(snap.stay_id, 0.0, &[0.0, 1.0]), Err(Error::ScenarioMismatch(_))));
    }

    #[test]
    fn weibull_oracle_is_the_conditional_survival() {
        let s = Scenario {
            kind: ScenarioKind::WeibullPh { shape: 1.5, scale_hours: 60.0 },
            beta: alloc::vec![0.5],
            censoring_rate: 0.0,
            max_stay_hours: None,
            seed: 3,
        };
        let c = generate(&s, 3).unwrap();
        let stay = &c.dataset.stays()[0];
        let l = &c.latents[0];
        let risk = (0.5 * l.x0[0]).exp();
        let s0 = |t: f64| (-(t / 60.0f64).powf(1.5)).exp();
        let t = 2.0f64.min(stay.n_snapshots() as f64 - 1.0);
        let o = c.oracle_at(&stay.stay_id, t, stay.features_at_hour(t as usize)).unwrap();
        for tau in [1.0, 10.0, 100.0] {
            let expected = (s0(t + tau) / s0(t)).powf(risk);
            assert!((o.survival_at(tau).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn time_varying_features_follow_the_drift() {
        let s = Scenario {
            kind: ScenarioKind::TimeVaryingHazard { baseline_rate: 1.0 / 48.0, drift_sd: 0.5 },
            beta: alloc::vec![0.7, -0.3],
            censoring_rate: 1.0 / 200.0,
            max_stay_hours: Some(2000.0),
            seed: 5,
        };
        let c = generate(&s, 40).unwrap();
        for (stay, l) in c.dataset.stays().iter().zip(&c.latents) {
            assert_eq!(stay.features().rows(), stay.n_snapshots());
            let last = stay.n_snapshots() - 1;
            let x = stay.features_at_hour(last);
            assert!((x[0] - (l.x0[0] + last as f64 / 24.0 * l.drift[0])).abs() < 1e-12);
        }
        for snap in snapshots_of(&c.dataset).step_by(37) {
            let o = c.oracle_curve(&snap).unwrap();
            assert!(o.survival_at(5.0).unwrap() >= o.survival_at(50.0).unwrap());
        }
    }

    #[test]
    fn never_ending_stays_are_rejected() {
        let s = Scenario {
            kind: ScenarioKind::TimeVaryingHazard { baseline_rate: 1e-4, drift_sd: 3.0 },
            beta: alloc::vec![2.0],
            censoring_rate: 0.0,
            max_stay_hours: None,
            seed: 1,
        };
        assert!(generate(&s, 200).is_err());
    }

    #[test]
    fn death_fraction_matches_the_hazard() {
        // P(T < 24 h) = 1 - e^{-1} with no censoring and no covariate effect
        let s = exp_scenario(alloc::vec![0.0], 0.0);
        let c = generate(&s, 20_000).unwrap();
        let n = c.latents.len() as f64;
        let frac = c.latents.iter().filter(|l| l.death_hours < 24.0).count() as f64 / n;
        let p = 0.632_120_558_828_557_7;
        assert!((frac - p).abs() < 3.0 * (p * (1.0 - p) / n).sqrt(), "{frac}");
    }

    #[test]
    fn reference_predictors() {
        let o = OracleCurve::Exponential { rate: 0.1 };
        let a = AntiOracle(o);
        assert!((a.survival_at(3.0).unwrap() - (1.0 - o.survival_at(3.0).unwrap())).abs() < 1e-15);
        assert_eq!(random_scores(1, 4), random_scores(1, 4));
        assert_eq!(ConstantCurve(0.3).cdf_at(17.0).unwrap(), 0.3);
    }

    proptest! {
        #[test]
        fn quantized_times_are_positive_half_hours(e in 1e-9f64..1e4) {
            let q = quantize_event_time(e);
            prop_assert!(q >= e && q > 0.0);
            prop_assert_eq!(q.fract(), 0.5);
            prop_assert!(q - e <= 1.0);
        }

        #[test]
        fn exponential_oracle_is_memoryless(t in 0.0f64..100.0, tau in 0.0f64..300.0) {
            let s = exp_scenario(alloc::vec![0.4], 0.0);
            let c = generate(&s, 1).unwrap();
            let stay = &c.dataset.stays()[0];
            let a = c.oracle_at(&stay.stay_id, 0.0, stay.features_at_hour(0)).unwrap();
            let b = c.oracle_at(&stay.stay_id, t, stay.features_at_hour(0)).unwrap();
            prop_assert_eq!(a.survival_at(tau).unwrap(), b.survival_at(tau).unwrap());
        }
    }
}
