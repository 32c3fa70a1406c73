//! Least-squares isotonic regression (pool adjacent violators) and the
//! monotone recalibration maps built on top of it.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Nondecreasing fit `m*_1 <= ... <= m*_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneFit {
    pub values: Vec<f64>,
}

impl MonotoneFit {
    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

/// Weighted isotonic regression by pool adjacent violators.
///
/// Returns the minimizer of `sum w_i (m_i - v_i)^2` subject to
/// `m_1 <= ... <= m_n`. Blocks are kept on a stack, each new value is merged
/// backwards while it violates the order, so the whole pass is `O(n)`.
pub fn pava(values: &[f64], weights: Option<&[f64]>) -> Result<MonotoneFit> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(w) = weights {
        if w.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                found: w.len(),
            });
        }
        if let Some(&bad) = w.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::domain("weight", bad));
        }
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain("value", bad));
    }

    // (weighted mean, total weight, number of points)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let mut cur = (v, w, 1usize);
        while let Some(&(pm, pw, pn)) = blocks.last() {
            if pm <= cur.0 {
                break;
            }
            blocks.pop();
            let tw = pw + cur.1;
            cur = ((pm * pw + cur.0 * cur.1) / tw, tw, pn + cur.2);
        }
        blocks.push(cur);
    }

    let mut out = Vec::with_capacity(values.len());
    for (m, _, n) in blocks {
        out.extend(core::iter::repeat_n(m, n));
    }
    Ok(MonotoneFit { values: out })
}

/// Monotone step map from raw predicted probabilities to calibrated ones.
///
/// Lookup is right-continuous: `p` maps to the output of the largest
/// threshold `<= p`, clamped to the first output below the first threshold.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecalibrationMap {
    thresholds: Vec<f64>,
    outputs: Vec<f64>,
    /// Set when every training prediction was identical.
    pub degenerate: bool,
}

impl RecalibrationMap {
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn apply(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("probability", p));
        }
        let j = self.thresholds.partition_point(|&t| t <= p);
        Ok(self.outputs[j.saturating_sub(1)])
    }
}

/// Fits a [`RecalibrationMap`] on `(predicted, outcome)` pairs.
///
/// Tied predictions are merged into one point weighted by its count, then
/// PAVA runs on the outcome frequencies in ascending prediction order.
pub fn fit_recalibration(predicted: &[f64], outcomes: &[bool]) -> Result<RecalibrationMap> {
    if predicted.len() != outcomes.len() {
        return Err(Error::LengthMismatch {
            expected: predicted.len(),
            found: outcomes.len(),
        });
    }
    if predicted.len() < 2 {
        return Err(Error::EmptyInput);
    }
    if let Some(&p) = predicted.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain("probability", p));
    }

    let mut order: Vec<usize> = (0..predicted.len()).collect();
    order.sort_by(|&a, &b| predicted[a].total_cmp(&predicted[b]));

    let mut thresholds = Vec::new();
    let mut freq = Vec::new();
    let mut counts = Vec::new();
    for &i in &order {
        let y = if outcomes[i] { 1.0 } else { 0.0 };
        if thresholds.last() == Some(&predicted[i]) {
            *freq.last_mut().unwrap() += y;
            *counts.last_mut().unwrap() += 1.0;
        } else {
            thresholds.push(predicted[i]);
            freq.push(y);
            counts.push(1.0);
        }
    }
    for (f, c) in freq.iter_mut().zip(&counts) {
        *f /= c;
    }
    let degenerate = thresholds.len() == 1;
    let outputs = pava(&freq, Some(&counts))?.into_inner();
    Ok(RecalibrationMap {
        thresholds,
        outputs,
        degenerate,
    })
}
