//! Exponential decay weighting `w(tau) = gamma^tau` (tau in days) and the
//! horizon grids that place base classifiers.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::HOURS_PER_DAY;

/// Default span of evenly spaced grids, in days.
pub const DEFAULT_EVEN_SPAN_DAYS: f64 = 10.0;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("gamma", gamma))
    }
}

/// `gamma^tau_days`.
pub fn weight(gamma: f64, tau_days: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(tau_days >= 0.0) {
        return Err(Error::domain("tau_days", tau_days));
    }
    Ok(math::pow(gamma, tau_days))
}

/// `log(p) / log(gamma)`, the horizon in days at which the weight drops to `p`.
pub fn inverse_weight(gamma: f64, p: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain("p", p));
    }
    let tau = math::log(p) / math::log(gamma);
    // log(1) / log(gamma) is -0.0
    Ok(tau + 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayWeighting {
    gamma: f64,
}

impl DecayWeighting {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weight_days(&self, tau_days: f64) -> Result<f64> {
        weight(self.gamma, tau_days)
    }

    /// Weight of a horizon given in hours.
    pub fn weight_hours(&self, tau_hours: f64) -> Result<f64> {
        weight(self.gamma, tau_hours / HOURS_PER_DAY)
    }

    pub fn inverse(&self, p: f64) -> Result<f64> {
        inverse_weight(self.gamma, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Spacing {
    Weighted { gamma: f64 },
    Even { span_days: f64 },
    Custom,
}

/// Strictly ascending positive horizons `h_1 < ... < h_K`, in hours.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HorizonGrid {
    horizons_hours: Vec<f64>,
    spacing: Spacing,
}

impl HorizonGrid {
    pub fn new(horizons_hours: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if horizons_hours.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(horizons_hours[0] > 0.0) || horizons_hours.iter().any(|h| !h.is_finite()) {
            return Err(Error::domain("horizon", horizons_hours[0]));
        }
        if let Some(w) = horizons_hours.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::domain("horizons must be strictly ascending at", w[1]));
        }
        Ok(Self {
            horizons_hours,
            spacing,
        })
    }

    pub fn custom(horizons_hours: Vec<f64>) -> Result<Self> {
        Self::new(horizons_hours, Spacing::Custom)
    }

    pub fn horizons_hours(&self) -> &[f64] {
        &self.horizons_hours
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.horizons_hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.horizons_hours.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.horizons_hours[self.horizons_hours.len() - 1]
    }
}

/// `h_k = w^{-1}(1 - k/(K+1))` for `k = 1..=K`: denser near the present.
pub fn weighted_horizons(gamma: f64, k: usize) -> Result<HorizonGrid> {
    check_gamma(gamma)?;
    if k == 0 {
        return Err(Error::InvalidConfig("weighted grid needs K >= 1".into()));
    }
    let denom = (k + 1) as f64;
    let hours = (1..=k)
        .map(|i| inverse_weight(gamma, 1.0 - i as f64 / denom).map(|days| days * HOURS_PER_DAY))
        .collect::<Result<Vec<_>>>()?;
    HorizonGrid::new(hours, Spacing::Weighted { gamma })
}

/// `h_k = 24 * k * span_days / K` hours.
pub fn even_horizons(k: usize, span_days: f64) -> Result<HorizonGrid> {
    if k == 0 {
        return Err(Error::InvalidConfig("even grid needs K >= 1".into()));
    }
    if !(span_days > 0.0 && span_days.is_finite()) {
        return Err(Error::domain("span_days", span_days));
    }
    let hours = (1..=k)
        .map(|i| HOURS_PER_DAY * span_days * i as f64 / k as f64)
        .collect();
    HorizonGrid::new(hours, Spacing::Even { span_days })
}

/// The daily grid `{24, 48, ..., 24 * days}` hours.
pub fn daily_horizons(days: usize) -> Result<HorizonGrid> {
    even_horizons(days, days as f64)
}
