//! Feed-forward ReLU network with a sigmoid output, trained full-batch with
//! Adam on the mean log-loss plus an L2 weight penalty.

use alloc::vec::Vec;

use super::{check_training_set, BinaryClassifier, ClassifierModel, HorizonLabeledSet, LearnerKind, TrainingInfo};
use crate::error::{Error, Result};
use crate::math;
use crate::nn::Mlp;
use crate::optim::{Adam, EarlyStopping, StopDecision};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FfnetConfig {
    /// Hidden layer widths; empty means logistic regression.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for FfnetConfig {
    fn default() -> Self {
        Self {
            hidden: alloc::vec![32],
            learning_rate: 0.01,
            l2: 1e-4,
            max_epochs: 300,
            early_stop_patience: 10,
            seed: 0,
        }
    }
}

impl FfnetConfig {
    /// Two hidden layers of 50 units, learning rate 1e-4, L2 0.01.
    pub fn large() -> Self {
        Self {
            hidden: alloc::vec![50, 50],
            learning_rate: 1e-4,
            l2: 0.01,
            max_epochs: 2000,
            early_stop_patience: 10,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("ffnet: {what}")));
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
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

    fn sizes(&self, d: usize) -> Vec<usize> {
        let mut s = alloc::vec![d];
        s.extend_from_slice(&self.hidden);
        s.push(1);
        s
    }
}

fn mean_loss(net: &Mlp, data: &HorizonLabeledSet) -> f64 {
    let mut ws = net.workspace();
    super::mean_log_loss(
        data.x.iter_rows().map(|x| math::sigmoid(net.forward(x, &mut ws)[0])),
        &data.labels,
    )
}

pub fn train_ffnet(
    train: &HorizonLabeledSet,
    valid: &HorizonLabeledSet,
    config: &FfnetConfig,
) -> Result<BinaryClassifier> {
    config.validate()?;
    let d = train.x.cols();
    if let Some(prior) = check_training_set(train, valid)? {
        return Ok(BinaryClassifier::constant(LearnerKind::FeedForward, d, prior));
    }
    let mut net = Mlp::seeded(&config.sizes(d), config.seed)?;
    let bias = net.output_bias_offset();
    net.params_mut()[bias] = math::logit(train.positive_rate());

    let n = train.len() as f64;
    let mut opt = Adam::new(net.params().len(), config.learning_rate);
    let mut stopper = EarlyStopping::new(config.early_stop_patience);
    let mut ws = net.workspace();
    let mut grads = alloc::vec![0.0; net.params().len()];
    let mut best = net.clone();
    let mut epochs = 0;

    for epoch in 0..config.max_epochs {
        epochs = epoch + 1;
        grads.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (x, &l) in train.x.iter_rows().zip(&train.labels) {
            let p = math::sigmoid(net.forward(x, &mut ws)[0]);
            loss += math::log_loss(p, l);
            let d_out = (p - if l { 1.0 } else { 0.0 }) / n;
            net.backward(&mut ws, &[d_out], &mut grads);
        }
        loss = loss / n + net.l2_penalty(config.l2, &mut grads);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        opt.step(net.params_mut(), &grads);

        if valid.is_empty() {
            continue;
        }
        let vloss = mean_loss(&net, valid);
        if !vloss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss: vloss });
        }
        match stopper.observe(vloss) {
            StopDecision::Improved => best = net.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    let best_round = if valid.is_empty() {
        best = net;
        None
    } else {
        stopper.best_epoch()
    };
    Ok(BinaryClassifier {
        kind: LearnerKind::FeedForward,
        n_features: d,
        model: ClassifierModel::FeedForward(best),
        info: TrainingInfo {
            rounds: epochs,
            best_round,
            single_class: false,
        },
    })
}
