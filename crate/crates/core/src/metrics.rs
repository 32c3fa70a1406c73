//! Time-weighted calibration and discrimination metrics.
//!
//! Both metrics are computed per horizon τ and then averaged with decay
//! weights `w(τ) = γ^{τ / 24}`:
//!
//! * calibration area: `∫_0^1 |c_τ(q) - q| dq` for the binned reliability
//!   curve `c_τ` at τ;
//! * concordance: among pairs `(i, j)` where `i` died exactly at τ and `j`
//!   was still under observation (`y_j >= τ`), the share with
//!   `S_i(τ) < S_j(τ)`.

use alloc::vec::Vec;

use crate::curve::SurvivalFn;
use crate::error::{Error, Result};
use crate::weighting::weight;
use crate::HOURS_PER_DAY;

/// One evaluated prediction: a curve with the observed outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalInstance<C> {
    pub curve: C,
    pub y_hours: f64,
    pub censored: bool,
}

impl<C> EvalInstance<C> {
    pub fn new(curve: C, y_hours: f64, censored: bool) -> Self {
        Self {
            curve,
            y_hours,
            censored,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TieMode {
    /// Ties count as discordant.
    #[default]
    Strict,
    /// Ties count half.
    HalfCredit,
}

/// Binned reliability curve at one horizon; empty bins are omitted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationCurve {
    pub tau_hours: f64,
    pub bin_mean_predicted: Vec<f64>,
    pub bin_fraction_positive: Vec<f64>,
    pub bin_counts: Vec<usize>,
    pub area: f64,
}

impl CalibrationCurve {
    pub fn instance_count(&self) -> usize {
        self.bin_counts.iter().sum()
    }

    /// Curve vertices: `(0, 0)`, the bins, `(1, 1)`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(self.bin_counts.len() + 2);
        pts.push((0.0, 0.0));
        pts.extend(self.bin_mean_predicted.iter().copied().zip(self.bin_fraction_positive.iter().copied()));
        pts.push((1.0, 1.0));
        pts
    }
}

/// `∫ |c(q) - q|` over one linear piece, exact.
fn segment_area(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let w = x1 - x0;
    if w <= 0.0 {
        return 0.0;
    }
    let (d0, d1) = (y0 - x0, y1 - x1);
    if d0 * d1 >= 0.0 {
        0.5 * w * (d0.abs() + d1.abs())
    } else {
        // the piece crosses the diagonal
        0.5 * w * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
    }
}

/// Area between the piecewise-linear curve through `points` and the diagonal.
pub fn area_from_diagonal(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|p| segment_area(p[0].0, p[0].1, p[1].0, p[1].1))
        .sum()
}

/// Outcome at τ: `Some(true)` death by τ, `Some(false)` alive past τ,
/// `None` censored by τ (excluded).
#[inline]
fn outcome_at(y: f64, censored: bool, tau: f64) -> Option<bool> {
    if y > tau {
        Some(false)
    } else if censored {
        None
    } else {
        Some(true)
    }
}

pub fn calibration_area_at<C: SurvivalFn>(
    instances: &[EvalInstance<C>],
    tau_hours: f64,
    n_bins: usize,
) -> Result<CalibrationCurve> {
    if n_bins == 0 {
        return Err(Error::InvalidConfig("n_bins must be positive".into()));
    }
    if !(tau_hours >= 0.0) {
        return Err(Error::domain("tau_hours", tau_hours));
    }
    let mut sum_p = alloc::vec![0.0; n_bins];
    let mut pos = alloc::vec![0usize; n_bins];
    let mut count = alloc::vec![0usize; n_bins];
    for inst in instances {
        let Some(event) = outcome_at(inst.y_hours, inst.censored, tau_hours) else {
            continue;
        };
        let p = inst.curve.cdf_at(tau_hours)?.clamp(0.0, 1.0);
        let b = ((p * n_bins as f64) as usize).min(n_bins - 1);
        sum_p[b] += p;
        count[b] += 1;
        pos[b] += event as usize;
    }
    let mut curve = CalibrationCurve {
        tau_hours,
        bin_mean_predicted: Vec::new(),
        bin_fraction_positive: Vec::new(),
        bin_counts: Vec::new(),
        area: 0.0,
    };
    for b in 0..n_bins {
        if count[b] == 0 {
            continue;
        }
        let n = count[b] as f64;
        curve.bin_mean_predicted.push(sum_p[b] / n);
        curve.bin_fraction_positive.push(pos[b] as f64 / n);
        curve.bin_counts.push(count[b]);
    }
    if curve.bin_counts.is_empty() {
        return Err(Error::NoInstances { tau: tau_hours });
    }
    curve.area = area_from_diagonal(&curve.points());
    Ok(curve)
}

/// A per-horizon value to be decay-weighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonValue {
    pub tau_hours: f64,
    pub value: f64,
}

/// Decay-weighted mean `Σ w(τ) v(τ) / Σ w(τ)`.
pub fn weighted_mean(values: &[HorizonValue], gamma: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for v in values {
        let w = weight(gamma, v.tau_hours / HOURS_PER_DAY)?;
        num += w * v.value;
        den += w;
    }
    Ok(num / den)
}

/// Weighted calibration with the horizons that had no instances.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCalibration {
    pub value: f64,
    pub curves: Vec<CalibrationCurve>,
    pub dropped_horizons: Vec<f64>,
}

/// Per-horizon calibration curves over a horizon set. Horizons without
/// instances are listed separately instead of failing.
pub fn calibration_curves<C: SurvivalFn>(
    instances: &[EvalInstance<C>],
    horizons_hours: &[f64],
    n_bins: usize,
) -> Result<(Vec<CalibrationCurve>, Vec<f64>)> {
    let mut curves = Vec::new();
    let mut dropped = Vec::new();
    for &tau in horizons_hours {
        match calibration_area_at(instances, tau, n_bins) {
            Ok(c) => curves.push(c),
            Err(Error::NoInstances { .. }) => dropped.push(tau),
            Err(e) => return Err(e),
        }
    }
    Ok((curves, dropped))
}

pub fn cal_weighted<C: SurvivalFn>(
    instances: &[EvalInstance<C>],
    horizons_hours: &[f64],
    gamma: f64,
    n_bins: usize,
) -> Result<WeightedCalibration> {
    if horizons_hours.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (curves, dropped) = calibration_curves(instances, horizons_hours, n_bins)?;
    if curves.is_empty() {
        return Err(Error::NoInstances { tau: horizons_hours[0] });
    }
    let areas: Vec<HorizonValue> = curves
        .iter()
        .map(|c| HorizonValue {
            tau_hours: c.tau_hours,
            value: c.area,
        })
        .collect();
    Ok(WeightedCalibration {
        value: weighted_mean(&areas, gamma)?,
        curves,
        dropped_horizons: dropped,
    })
}

/// Concordance counts at one death time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairCounts {
    pub tau_hours: f64,
    /// Concordant pairs (ties add 0.5 in half-credit mode).
    pub concordant: f64,
    pub pairs: u64,
}

impl PairCounts {
    pub fn fraction(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.concordant / self.pairs as f64)
    }
}

fn count_pairs(deaths: &[f64], at_risk_sorted: &[f64], tie_mode: TieMode) -> (f64, u64) {
    if deaths.is_empty() {
        return (0.0, 0);
    }
    let n = at_risk_sorted.len();
    let mut conc = 0.0;
    for &s in deaths {
        let lo = at_risk_sorted.partition_point(|&v| v < s);
        let hi = at_risk_sorted.partition_point(|&v| v <= s);
        let greater = (n - hi) as f64;
        conc += match tie_mode {
            TieMode::Strict => greater,
            // the dead instance itself is among the ties
            TieMode::HalfCredit => greater + 0.5 * (hi - lo - 1) as f64,
        };
    }
    (conc, (deaths.len() * (n - 1)) as u64)
}

/// Distinct death times, ascending.
pub fn death_times<C>(instances: &[EvalInstance<C>]) -> Vec<f64> {
    let mut t: Vec<f64> = instances.iter().filter(|i| !i.censored).map(|i| i.y_hours).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

pub fn concordant_fraction_at<C: SurvivalFn>(
    instances: &[EvalInstance<C>],
    tau_hours: f64,
    tie_mode: TieMode,
) -> Result<PairCounts> {
    let mut deaths = Vec::new();
    let mut at_risk = Vec::new();
    for inst in instances {
        if inst.y_hours >= tau_hours {
            let s = inst.curve.survival_at(tau_hours)?;
            at_risk.push(s);
            if !inst.censored && inst.y_hours == tau_hours {
                deaths.push(s);
            }
        }
    }
    at_risk.sort_by(f64::total_cmp);
    let (concordant, pairs) = count_pairs(&deaths, &at_risk, tie_mode);
    if pairs == 0 {
        return Err(Error::NoPairs { tau: tau_hours });
    }
    Ok(PairCounts {
        tau_hours,
        concordant,
        pairs,
    })
}

/// Pair counts at every distinct death time that has at least one pair.
///
/// Instances are sorted by `y` descending once, so the risk set at each death
/// time is a prefix of that order.
pub fn concordance_by_death_time<C: SurvivalFn>(instances: &[EvalInstance<C>], tie_mode: TieMode) -> Result<Vec<PairCounts>> {
    let times = death_times(instances);
    if times.is_empty() {
        return Err(Error::NoDeaths);
    }
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by(|&a, &b| instances[b].y_hours.total_cmp(&instances[a].y_hours));
    let mut out = Vec::with_capacity(times.len());
    let mut at_risk = Vec::new();
    let mut deaths = Vec::new();
    for &tau in &times {
        let end = order.partition_point(|&i| instances[i].y_hours >= tau);
        at_risk.clear();
        deaths.clear();
        for &i in &order[..end] {
            let inst = &instances[i];
            let s = inst.curve.survival_at(tau)?;
            at_risk.push(s);
            if !inst.censored && inst.y_hours == tau {
                deaths.push(s);
            }
        }
        at_risk.sort_by(f64::total_cmp);
        let (concordant, pairs) = count_pairs(&deaths, &at_risk, tie_mode);
        if pairs > 0 {
            out.push(PairCounts {
                tau_hours: tau,
                concordant,
                pairs,
            });
        }
    }
    Ok(out)
}

/// `Σ_τ w(τ) concordant_τ / Σ_τ w(τ) |P_τ|`.
pub fn ctd_from_counts(counts: &[PairCounts], gamma: f64) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for c in counts {
        let w = weight(gamma, c.tau_hours / HOURS_PER_DAY)?;
        num += w * c.concordant;
        den += w * c.pairs as f64;
    }
    if den == 0.0 {
        return Err(Error::NoPairs {
            tau: counts.first().map_or(0.0, |c| c.tau_hours),
        });
    }
    Ok(num / den)
}

pub fn ctd_weighted<C: SurvivalFn>(instances: &[EvalInstance<C>], gamma: f64, tie_mode: TieMode) -> Result<f64> {
    ctd_from_counts(&concordance_by_death_time(instances, tie_mode)?, gamma)
}

/// Which horizons and weights a report covers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MetricConfig {
    pub gammas: Vec<f64>,
    /// Calibration horizon set, hours.
    pub horizons_hours: Vec<f64>,
    pub n_bins: usize,
    pub tie_mode: TieMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            gammas: alloc::vec![0.3, 0.5, 0.8],
            horizons_hours: (1..=10).map(|d| d as f64 * HOURS_PER_DAY).collect(),
            n_bins: 10,
            tie_mode: TieMode::Strict,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(Error::InvalidConfig("metrics: gammas must not be empty".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::InvalidConfig(alloc::format!("metrics: gamma {g} outside (0, 1)")));
        }
        if self.horizons_hours.is_empty() || self.horizons_hours.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidConfig("metrics: horizons must be positive and finite".into()));
        }
        if self.n_bins == 0 {
            return Err(Error::InvalidConfig("metrics: n_bins must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HorizonMetrics {
    pub tau_hours: f64,
    pub cal_area: Option<f64>,
    pub concordant_fraction: Option<f64>,
    pub pair_count: u64,
    pub instance_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedMetrics {
    pub gamma: f64,
    pub cal_w: f64,
    pub ctd_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    /// Rows for the calibration horizons and every death time, ascending.
    pub per_horizon: Vec<HorizonMetrics>,
    pub weighted: Vec<WeightedMetrics>,
    /// Calibration horizons skipped for lack of instances.
    pub dropped_horizons: Vec<f64>,
}

pub fn evaluate<C: SurvivalFn>(instances: &[EvalInstance<C>], config: &MetricConfig) -> Result<MetricReport> {
    config.validate()?;
    let (curves, dropped) = calibration_curves(instances, &config.horizons_hours, config.n_bins)?;
    if curves.is_empty() {
        return Err(Error::NoInstances {
            tau: config.horizons_hours[0],
        });
    }
    let pairs = concordance_by_death_time(instances, config.tie_mode)?;
    let areas: Vec<HorizonValue> = curves
        .iter()
        .map(|c| HorizonValue {
            tau_hours: c.tau_hours,
            value: c.area,
        })
        .collect();
    let weighted = config
        .gammas
        .iter()
        .map(|&gamma| {
            Ok(WeightedMetrics {
                gamma,
                cal_w: weighted_mean(&areas, gamma)?,
                ctd_w: ctd_from_counts(&pairs, gamma)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<HorizonMetrics> = curves
        .iter()
        .map(|c| HorizonMetrics {
            tau_hours: c.tau_hours,
            cal_area: Some(c.area),
            concordant_fraction: None,
            pair_count: 0,
            instance_count: c.instance_count(),
        })
        .collect();
    for p in &pairs {
        match rows.iter_mut().find(|r| r.tau_hours == p.tau_hours) {
            Some(r) => {
                r.concordant_fraction = p.fraction();
                r.pair_count = p.pairs;
            }
            None => rows.push(HorizonMetrics {
                tau_hours: p.tau_hours,
                cal_area: None,
                concordant_fraction: p.fraction(),
                pair_count: p.pairs,
                instance_count: 0,
            }),
        }
    }
    rows.sort_by(|a, b| a.tau_hours.total_cmp(&b.tau_hours));
    Ok(MetricReport {
        per_horizon: rows,
        weighted,
        dropped_horizons: dropped,
    })
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

pub fn mean_se(values: &[f64]) -> Result<MeanSe> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok(MeanSe { mean, se: 0.0 });
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(MeanSe {
        mean,
        se: libm::sqrt(var / n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AggregatedWeighted {
    pub gamma: f64,
    pub cal_w: MeanSe,
    pub ctd_w: MeanSe,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AggregateReport {
    pub n_splits: usize,
    /// Set when only one split was given; standard errors are then 0.
    pub insufficient_replicates: bool,
    pub weighted: Vec<AggregatedWeighted>,
}

/// Mean and standard error of the weighted metrics across split reports.
pub fn aggregate_splits(reports: &[MetricReport]) -> Result<AggregateReport> {
    let first = reports.first().ok_or(Error::EmptyInput)?;
    let mut weighted = Vec::with_capacity(first.weighted.len());
    for (k, w) in first.weighted.iter().enumerate() {
        let mut cal = Vec::with_capacity(reports.len());
        let mut ctd = Vec::with_capacity(reports.len());
        for r in reports {
            let rw = r.weighted.get(k).filter(|rw| rw.gamma == w.gamma).ok_or_else(|| {
                Error::InvalidData("split reports cover different gammas".into())
            })?;
            cal.push(rw.cal_w);
            ctd.push(rw.ctd_w);
        }
        weighted.push(AggregatedWeighted {
            gamma: w.gamma,
            cal_w: mean_se(&cal)?,
            ctd_w: mean_se(&ctd)?,
        });
    }
    Ok(AggregateReport {
        n_splits: reports.len(),
        insufficient_replicates: reports.len() < 2,
        weighted,
    })
}
