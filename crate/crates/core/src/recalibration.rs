//! Post-hoc isotonic recalibration of whole survival curves: one monotone map
//! per knot, fitted on held-out instances, followed by a monotone projection
//! across knots.

use alloc::vec::Vec;

use crate::curve::{BeyondSupport, SurvivalCurve, SurvivalFn};
use crate::error::{Error, Result};
use crate::isotonic::{fit_recalibration, RecalibrationMap};
use crate::metrics::EvalInstance;
use crate::wrse::monotone_cdf;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecalibrator {
    knots: Vec<f64>,
    /// `None` where fewer than two labeled instances were available; that
    /// knot passes through unchanged.
    maps: Vec<Option<RecalibrationMap>>,
}

impl CurveRecalibrator {
    /// Fits one map per knot on `(F(τ), died by τ)` pairs, leaving out
    /// instances censored by τ.
    pub fn fit<C: SurvivalFn>(instances: &[EvalInstance<C>], knots: &[f64]) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(w) = knots.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::domain("knots must be strictly ascending at", w[1]));
        }
        let mut maps = Vec::with_capacity(knots.len());
        let mut predicted = Vec::with_capacity(instances.len());
        let mut outcomes = Vec::with_capacity(instances.len());
        for &tau in knots {
            predicted.clear();
            outcomes.clear();
            for inst in instances {
                if inst.censored && inst.y_hours <= tau {
                    continue;
                }
                predicted.push(inst.curve.cdf_at(tau)?.clamp(0.0, 1.0));
                outcomes.push(inst.y_hours <= tau);
            }
            maps.push(if predicted.len() >= 2 {
                Some(fit_recalibration(&predicted, &outcomes)?)
            } else {
                None
            });
        }
        Ok(Self {
            knots: knots.to_vec(),
            maps,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn maps(&self) -> &[Option<RecalibrationMap>] {
        &self.maps
    }

    pub fn apply<C: SurvivalFn>(&self, curve: &C) -> Result<SurvivalCurve> {
        let mut raw = Vec::with_capacity(self.knots.len());
        for (&tau, map) in self.knots.iter().zip(&self.maps) {
            let p = curve.cdf_at(tau)?.clamp(0.0, 1.0);
            raw.push(match map {
                Some(m) => m.apply(p)?,
                None => p,
            });
        }
        SurvivalCurve::new(self.knots.clone(), monotone_cdf(&raw)?, BeyondSupport::Clamp)
    }
}
