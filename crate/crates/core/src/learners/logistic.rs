//! L2-regularized logistic regression fit by full-batch proximal gradient
//! descent. The bias is not penalized.

use alloc::vec::Vec;

use super::{check_training_set, BinaryClassifier, ClassifierModel, HorizonLabeledSet, LearnerKind, TrainingInfo};
use crate::error::{Error, Result};
use crate::math;
use crate::optim::{EarlyStopping, StopDecision};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            l2: 1e-4,
            max_epochs: 500,
            early_stop_patience: 10,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("logistic: {what}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be finite and nonnegative");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self.early_stop_patience == 0 {
            return bad("early_stop_patience must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .fold(self.bias, |acc, (w, xi)| acc + w * xi)
    }
}

pub fn train_logistic(
    train: &HorizonLabeledSet,
    valid: &HorizonLabeledSet,
    config: &LogisticConfig,
) -> Result<BinaryClassifier> {
    config.validate()?;
    let d = train.x.cols();
    if let Some(prior) = check_training_set(train, valid)? {
        return Ok(BinaryClassifier::constant(LearnerKind::Logistic, d, prior));
    }
    let n = train.len() as f64;
    let lr = config.learning_rate;
    let mut model = LinearModel {
        weights: alloc::vec![0.0; d],
        bias: 0.0,
    };
    let mut best = model.clone();
    let mut stopper = EarlyStopping::new(config.early_stop_patience);
    let mut grad = alloc::vec![0.0; d];
    let mut epochs = 0;

    for epoch in 0..config.max_epochs {
        epochs = epoch + 1;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, &l) in train.x.iter_rows().zip(&train.labels) {
            let r = math::sigmoid(model.raw_score(x)) - if l { 1.0 } else { 0.0 };
            gb += r;
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += r * xi;
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w = (*w - lr * g / n) / (1.0 + lr * config.l2);
        }
        model.bias -= lr * gb / n;

        if valid.is_empty() {
            continue;
        }
        let loss = super::mean_log_loss(
            valid.x.iter_rows().map(|x| math::sigmoid(model.raw_score(x))),
            &valid.labels,
        );
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        match stopper.observe(loss) {
            StopDecision::Improved => best = model.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    let best_round = if valid.is_empty() {
        best = model;
        None
    } else {
        stopper.best_epoch()
    };
    Ok(BinaryClassifier {
        kind: LearnerKind::Logistic,
        n_features: d,
        model: ClassifierModel::Logistic(best),
        info: TrainingInfo {
            rounds: epochs,
            best_round,
            single_class: false,
        },
    })
}
