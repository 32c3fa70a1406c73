//! Gradient-boosted regression trees on the logistic loss.
//!
//! Trees grow leaf-wise (best-first) up to `max_leaves`, using exact greedy
//! splits on raw feature values and second-order (Newton) leaf values.
//! Candidate splits are scanned in feature order, then threshold order, and
//! only a strictly larger gain replaces the incumbent, so ties go to the
//! lowest feature index and then the lowest threshold.

use alloc::vec::Vec;

use super::{check_training_set, BinaryClassifier, ClassifierModel, HorizonLabeledSet, LearnerKind, TrainingInfo};
use crate::error::{Error, Result};
use crate::math;
use crate::optim::{EarlyStopping, StopDecision};

/// Minimum hessian mass on either side of a split.
const MIN_CHILD_HESSIAN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GbtConfig {
    pub max_leaves: usize,
    pub max_trees: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub early_stop_patience: usize,
    /// L2 penalty on leaf values.
    pub l2_leaf: f64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl GbtConfig {
    /// Small configuration that trains in seconds on desk-sized cohorts.
    pub fn desk() -> Self {
        Self {
            max_leaves: 31,
            max_trees: 200,
            learning_rate: 0.1,
            min_samples_leaf: 20,
            early_stop_patience: 10,
            l2_leaf: 0.0,
        }
    }

    /// 64 leaves, 1000 trees, learning rate 0.01.
    pub fn large() -> Self {
        Self {
            max_leaves: 64,
            max_trees: 1000,
            learning_rate: 0.01,
            min_samples_leaf: 20,
            early_stop_patience: 10,
            l2_leaf: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("gbt: {what}")));
        if self.max_trees == 0 {
            return bad("max_trees must be positive");
        }
        if self.max_leaves == 0 {
            return bad("max_leaves must be positive");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if self.early_stop_patience == 0 {
            return bad("early_stop_patience must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and nonnegative");
        }
        if !(self.l2_leaf >= 0.0 && self.l2_leaf.is_finite()) {
            return bad("l2_leaf must be finite and nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// Additive model; leaf values already include the learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + t.predict(x))
    }

    pub fn uses_feature(&self, f: usize) -> bool {
        self.trees.iter().any(|t| {
            t.nodes
                .iter()
                .any(|n| matches!(n, TreeNode::Split { feature, .. } if *feature == f))
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Leaf {
    node: usize,
    samples: Vec<u32>,
    /// Per feature, the leaf's samples sorted by that feature.
    sorted: Vec<Vec<u32>>,
    sum_g: f64,
    sum_h: f64,
    best: Option<SplitCandidate>,
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    config: &'a GbtConfig,
}

impl Grower<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.config.l2_leaf)
    }

    fn find_split(&self, leaf: &mut Leaf) {
        let n = leaf.samples.len();
        let min_leaf = self.config.min_samples_leaf;
        if n < 2 * min_leaf {
            leaf.best = None;
            return;
        }
        let parent = self.score(leaf.sum_g, leaf.sum_h);
        let mut best: Option<SplitCandidate> = None;
        for (f, order) in leaf.sorted.iter().enumerate() {
            let col = &self.columns[f];
            let (mut gl, mut hl) = (0.0, 0.0);
            for pos in 0..n - 1 {
                let i = order[pos] as usize;
                gl += self.grad[i];
                hl += self.hess[i];
                let count = pos + 1;
                if count < min_leaf {
                    continue;
                }
                if n - count < min_leaf {
                    break;
                }
                let v = col[i];
                if !(v < col[order[pos + 1] as usize]) {
                    continue;
                }
                let hr = leaf.sum_h - hl;
                if hl < MIN_CHILD_HESSIAN || hr < MIN_CHILD_HESSIAN {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(leaf.sum_g - gl, hr) - parent;
                if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        gain,
                        feature: f,
                        threshold: v,
                    });
                }
            }
        }
        leaf.best = best;
    }

    fn leaf(&self, node: usize, samples: Vec<u32>, sorted: Vec<Vec<u32>>) -> Leaf {
        let (mut g, mut h) = (0.0, 0.0);
        for &i in &samples {
            g += self.grad[i as usize];
            h += self.hess[i as usize];
        }
        let mut leaf = Leaf {
            node,
            samples,
            sorted,
            sum_g: g,
            sum_h: h,
            best: None,
        };
        self.find_split(&mut leaf);
        leaf
    }

    /// Grows one tree and adds its leaf values to `raw`.
    fn grow(&self, presorted: &[Vec<u32>], n: usize, raw: &mut [f64], goes_left: &mut [bool]) -> Tree {
        let mut nodes = alloc::vec![TreeNode::Leaf { value: 0.0 }];
        let mut leaves = alloc::vec![self.leaf(0, (0..n as u32).collect(), presorted.to_vec())];

        while leaves.len() < self.config.max_leaves {
            let mut pick: Option<(usize, f64)> = None;
            for (li, leaf) in leaves.iter().enumerate() {
                if let Some(b) = leaf.best {
                    if pick.is_none_or(|(_, g)| b.gain > g) {
                        pick = Some((li, b.gain));
                    }
                }
            }
            let Some((li, _)) = pick else { break };
            let leaf = leaves.remove(li);
            let split = leaf.best.expect("picked leaf has a split");
            let col = &self.columns[split.feature];
            for &i in &leaf.samples {
                goes_left[i as usize] = col[i as usize] <= split.threshold;
            }
            let partition = |list: &[u32]| -> (Vec<u32>, Vec<u32>) {
                list.iter().partition(|&&i| goes_left[i as usize])
            };
            let (ls, rs) = partition(&leaf.samples);
            let (mut lsorted, mut rsorted) = (Vec::with_capacity(leaf.sorted.len()), Vec::with_capacity(leaf.sorted.len()));
            for list in &leaf.sorted {
                let (l, r) = partition(list);
                lsorted.push(l);
                rsorted.push(r);
            }
            let left = nodes.len();
            nodes.push(TreeNode::Leaf { value: 0.0 });
            nodes.push(TreeNode::Leaf { value: 0.0 });
            nodes[leaf.node] = TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right: left + 1,
            };
            drop(leaf);
            // the left child takes the parent's slot, so gain ties resolve by age
            let l = self.leaf(left, ls, lsorted);
            let r = self.leaf(left + 1, rs, rsorted);
            leaves.insert(li, l);
            leaves.push(r);
        }

        for leaf in &leaves {
            let value = if leaf.sum_h + self.config.l2_leaf > 0.0 {
                -leaf.sum_g / (leaf.sum_h + self.config.l2_leaf) * self.config.learning_rate
            } else {
                0.0
            };
            nodes[leaf.node] = TreeNode::Leaf { value };
            for &i in &leaf.samples {
                raw[i as usize] += value;
            }
        }
        Tree { nodes }
    }
}

/// Boosts trees on the training labels, early-stopping on validation log-loss.
///
/// An empty validation set disables early stopping. A single-class training
/// set yields a constant classifier at the class prior.
pub fn train_gbt(
    train: &HorizonLabeledSet,
    valid: &HorizonLabeledSet,
    config: &GbtConfig,
) -> Result<BinaryClassifier> {
    config.validate()?;
    let d = train.x.cols();
    if let Some(prior) = check_training_set(train, valid)? {
        return Ok(BinaryClassifier::constant(LearnerKind::GradientBoostedTrees, d, prior));
    }
    let n = train.len();
    let base_score = math::logit(train.positive_rate());

    let columns: Vec<Vec<f64>> = (0..d).map(|f| train.x.column(f)).collect();
    let presorted: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
            idx
        })
        .collect();
    let targets: Vec<f64> = train.labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();

    let mut raw = alloc::vec![base_score; n];
    let mut valid_raw = alloc::vec![base_score; valid.len()];
    let mut grad = alloc::vec![0.0; n];
    let mut hess = alloc::vec![0.0; n];
    let mut goes_left = alloc::vec![false; n];
    let mut trees = Vec::new();
    let mut stopper = EarlyStopping::new(config.early_stop_patience);

    for _round in 0..config.max_trees {
        for i in 0..n {
            let p = math::sigmoid(raw[i]);
            grad[i] = p - targets[i];
            hess[i] = p * (1.0 - p);
        }
        let grower = Grower {
            columns: &columns,
            grad: &grad,
            hess: &hess,
            config,
        };
        let tree = grower.grow(&presorted, n, &mut raw, &mut goes_left);
        if !valid.is_empty() {
            for (r, x) in valid_raw.iter_mut().zip(valid.x.iter_rows()) {
                *r += tree.predict(x);
            }
        }
        trees.push(tree);
        if valid.is_empty() {
            continue;
        }
        let loss = super::mean_log_loss(valid_raw.iter().map(|&r| math::sigmoid(r)), &valid.labels);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: trees.len() - 1,
                loss,
            });
        }
        if stopper.observe(loss) == StopDecision::Stop {
            break;
        }
    }

    let rounds = trees.len();
    let best_round = if valid.is_empty() {
        None
    } else {
        stopper.best_epoch()
    };
    if let Some(b) = best_round {
        trees.truncate(b + 1);
    }
    Ok(BinaryClassifier {
        kind: LearnerKind::GradientBoostedTrees,
        n_features: d,
        model: ClassifierModel::Gbt(GbtModel { base_score, trees }),
        info: TrainingInfo {
            rounds,
            best_round,
            single_class: false,
        },
    })
}
