//! Fixed-horizon binary classifiers estimating `Pr[T < h | x]`.

use alloc::vec::Vec;

use crate::data::SnapshotTable;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

pub mod ffnet;
pub mod gbt;
pub mod logistic;

pub use ffnet::{train_ffnet, FfnetConfig};
pub use gbt::{train_gbt, GbtConfig, GbtModel, Tree, TreeNode};
pub use logistic::{train_logistic, LinearModel, LogisticConfig};

use crate::nn::Mlp;

/// Snapshots labeled for one horizon `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonLabeledSet {
    pub x: Matrix,
    /// `true` = died within `h`.
    pub labels: Vec<bool>,
    /// Row of the source snapshot table for each labeled row.
    pub kept_indices: Vec<usize>,
}

impl HorizonLabeledSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positive_rate(&self) -> f64 {
        self.labels.iter().filter(|&&l| l).count() as f64 / self.labels.len() as f64
    }

    pub fn empty(n_features: usize) -> Self {
        Self {
            x: Matrix::with_cols(n_features),
            labels: Vec::new(),
            kept_indices: Vec::new(),
        }
    }
}

/// Label of one snapshot at horizon `h`: `Some(true)` death within `h`,
/// `Some(false)` still alive after `h`, `None` censored before `h` (unknown).
#[inline]
pub fn horizon_label(y_hours: f64, censored: bool, h_hours: f64) -> Option<bool> {
    if y_hours > h_hours {
        Some(false)
    } else if censored {
        None
    } else {
        Some(true)
    }
}

/// Labels every snapshot for horizon `h`, dropping those censored before `h`.
pub fn make_horizon_labels(snapshots: &SnapshotTable, h_hours: f64) -> Result<HorizonLabeledSet> {
    if !(h_hours > 0.0) {
        return Err(Error::domain("horizon", h_hours));
    }
    let mut kept = Vec::new();
    let mut labels = Vec::new();
    for i in 0..snapshots.len() {
        if let Some(l) = horizon_label(snapshots.y_hours[i], snapshots.censored[i], h_hours) {
            kept.push(i);
            labels.push(l);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyResult { horizon_hours: h_hours });
    }
    Ok(HorizonLabeledSet {
        x: snapshots.x.select_rows(&kept),
        labels,
        kept_indices: kept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LearnerKind {
    GradientBoostedTrees,
    Logistic,
    FeedForward,
}

/// Base learner choice together with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BaseLearner {
    Gbt(GbtConfig),
    Logistic(LogisticConfig),
    FeedForward(FfnetConfig),
}

impl BaseLearner {
    pub fn kind(&self) -> LearnerKind {
        match self {
            BaseLearner::Gbt(_) => LearnerKind::GradientBoostedTrees,
            BaseLearner::Logistic(_) => LearnerKind::Logistic,
            BaseLearner::FeedForward(_) => LearnerKind::FeedForward,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseLearner::Gbt(c) => c.validate(),
            BaseLearner::Logistic(c) => c.validate(),
            BaseLearner::FeedForward(c) => c.validate(),
        }
    }

    pub fn train(&self, train: &HorizonLabeledSet, valid: &HorizonLabeledSet) -> Result<BinaryClassifier> {
        match self {
            BaseLearner::Gbt(c) => train_gbt(train, valid, c),
            BaseLearner::Logistic(c) => train_logistic(train, valid, c),
            BaseLearner::FeedForward(c) => train_ffnet(train, valid, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    /// Constant probability, used when training saw a single class.
    Constant(f64),
    Gbt(GbtModel),
    Logistic(LinearModel),
    /// Network with one raw output, squashed by a sigmoid.
    FeedForward(Mlp),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainingInfo {
    /// Boosting rounds or epochs actually run.
    pub rounds: usize,
    /// Round/epoch whose parameters were kept (early stopping).
    pub best_round: Option<usize>,
    /// Training labels held a single class; the model is the class prior.
    pub single_class: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryClassifier {
    pub kind: LearnerKind,
    pub n_features: usize,
    pub model: ClassifierModel,
    pub info: TrainingInfo,
}

impl BinaryClassifier {
    pub fn constant(kind: LearnerKind, n_features: usize, p: f64) -> Self {
        Self {
            kind,
            n_features,
            model: ClassifierModel::Constant(p),
            info: TrainingInfo {
                single_class: true,
                ..Default::default()
            },
        }
    }

    /// `Pr[T < h | x]`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let p = match &self.model {
            ClassifierModel::Constant(p) => *p,
            ClassifierModel::Gbt(m) => math::sigmoid(m.raw_score(x)),
            ClassifierModel::Logistic(m) => math::sigmoid(m.raw_score(x)),
            ClassifierModel::FeedForward(net) => {
                let mut ws = net.workspace();
                math::sigmoid(net.forward(x, &mut ws)[0])
            }
        };
        p.clamp(0.0, 1.0)
    }

    /// Mean log-loss over a labeled set.
    pub fn log_loss(&self, data: &HorizonLabeledSet) -> f64 {
        mean_log_loss(data.x.iter_rows().map(|x| self.predict_unchecked(x)), &data.labels)
    }
}

pub(crate) fn mean_log_loss(probs: impl Iterator<Item = f64>, labels: &[bool]) -> f64 {
    let mut s = 0.0;
    for (p, &l) in probs.zip(labels) {
        s += math::log_loss(p, l);
    }
    s / labels.len() as f64
}

/// Checks shared by all trainers. Returns `Some(prior)` when the training set
/// holds a single class.
pub(crate) fn check_training_set(
    train: &HorizonLabeledSet,
    valid: &HorizonLabeledSet,
) -> Result<Option<f64>> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    if train.x.rows() != train.labels.len() {
        return Err(Error::LengthMismatch {
            expected: train.x.rows(),
            found: train.labels.len(),
        });
    }
    if !valid.is_empty() && valid.x.cols() != train.x.cols() {
        return Err(Error::DimensionMismatch {
            expected: train.x.cols(),
            found: valid.x.cols(),
        });
    }
    let prior = train.positive_rate();
    if prior == 0.0 || prior == 1.0 {
        Ok(Some(prior))
    } else {
        Ok(None)
    }
}
