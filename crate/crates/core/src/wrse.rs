//! Weighted resolution survival ensemble: one binary classifier per horizon,
//! stitched into a monotone CDF by isotonic projection.

use alloc::vec::Vec;

use crate::curve::{BeyondSupport, SurvivalCurve};
use crate::data::{Dataset, SnapshotTable};
use crate::error::{Error, Result};
use crate::isotonic::pava;
use crate::learners::{make_horizon_labels, BaseLearner, BinaryClassifier, HorizonLabeledSet};
use crate::matrix::Matrix;
use crate::weighting::HorizonGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct WrseModel {
    grid: HorizonGrid,
    classifiers: Vec<BinaryClassifier>,
    base: BaseLearner,
    n_features: usize,
    pub beyond_last: BeyondSupport,
}

/// Trains the classifier for horizon `k` (0-based) of `grid`.
///
/// Horizons are independent of each other, so callers may run this for
/// different `k` on any number of threads and collect the results in order.
pub fn fit_horizon(
    train: &SnapshotTable,
    valid: &SnapshotTable,
    grid: &HorizonGrid,
    k: usize,
    base: &BaseLearner,
) -> Result<BinaryClassifier> {
    let h = grid.horizons_hours()[k];
    let annotate = |e: Error| e.at_horizon(k + 1, h);
    let train_set = make_horizon_labels(train, h).map_err(annotate)?;
    let valid_set = match make_horizon_labels(valid, h) {
        Ok(v) => v,
        Err(Error::EmptyResult { .. }) => HorizonLabeledSet::empty(train.n_features()),
        Err(e) => return Err(annotate(e)),
    };
    base.train(&train_set, &valid_set).map_err(annotate)
}

/// Sequential reference implementation over snapshot tables.
pub fn fit_wrse_tables(
    train: &SnapshotTable,
    valid: &SnapshotTable,
    grid: &HorizonGrid,
    base: &BaseLearner,
) -> Result<WrseModel> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    base.validate()?;
    let classifiers = (0..grid.len())
        .map(|k| fit_horizon(train, valid, grid, k, base))
        .collect::<Result<Vec<_>>>()?;
    WrseModel::from_parts(grid.clone(), classifiers, base.clone(), BeyondSupport::Clamp)
}

pub fn fit_wrse(train: &Dataset, valid: &Dataset, grid: &HorizonGrid, base: &BaseLearner) -> Result<WrseModel> {
    fit_wrse_tables(
        &SnapshotTable::from_dataset(train),
        &SnapshotTable::from_dataset(valid),
        grid,
        base,
    )
}

/// Projects raw per-horizon probabilities onto nondecreasing CDF values.
pub fn monotone_cdf(raw: &[f64]) -> Result<Vec<f64>> {
    let clipped: Vec<f64> = raw.iter().map(|p| p.clamp(0.0, 1.0)).collect();
    let mut fit = pava(&clipped, None)?.into_inner();
    // pooled means of values in [0, 1] stay in [0, 1] up to rounding
    fit.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(fit)
}

impl WrseModel {
    pub fn from_parts(
        grid: HorizonGrid,
        classifiers: Vec<BinaryClassifier>,
        base: BaseLearner,
        beyond_last: BeyondSupport,
    ) -> Result<Self> {
        if classifiers.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: classifiers.len(),
            });
        }
        let n_features = classifiers[0].n_features;
        if let Some(c) = classifiers.iter().find(|c| c.n_features != n_features) {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                found: c.n_features,
            });
        }
        Ok(Self {
            grid,
            classifiers,
            base,
            n_features,
            beyond_last,
        })
    }

    pub fn grid(&self) -> &HorizonGrid {
        &self.grid
    }

    pub fn classifiers(&self) -> &[BinaryClassifier] {
        &self.classifiers
    }

    pub fn base(&self) -> &BaseLearner {
        &self.base
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Unprojected `[m_1(x), ..., m_K(x)]`.
    pub fn raw_predictions(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.classifiers.iter().map(|c| c.predict_unchecked(x)).collect())
    }

    pub fn predict_cdf(&self, x: &[f64]) -> Result<SurvivalCurve> {
        let cdf = monotone_cdf(&self.raw_predictions(x)?)?;
        SurvivalCurve::new(self.grid.horizons_hours().to_vec(), cdf, self.beyond_last)
    }

    /// One curve per row, in row order.
    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<SurvivalCurve>> {
        if x.rows() > 0 && x.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.cols(),
            });
        }
        x.iter_rows().map(|row| self.predict_cdf(row)).collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(())
    }
}
