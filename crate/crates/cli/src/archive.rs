//! Single-file model archives.
//!
//! Layout, all integers little-endian `u64` unless noted, all reals
//! little-endian IEEE-754 `f64`:
//!
//! ```text
//! magic      8 bytes  "WRSEARCH"
//! version    u32      1
//! kind       u8       1 = WRSE, 2 = parametric
//! dataset    32 bytes SHA-256 fingerprint of the training dataset
//! split      u64      split index
//! meta_len   u64      length of the JSON metadata that follows
//! meta       bytes    JSON: base learner or parametric config, grid spacing
//! payload    kind-specific, below
//! ```
//!
//! WRSE payload: `K`, `K` horizons, `beyond_last` (u8: 0 clamp, 1 undefined),
//! `n_features`, then `K` classifiers. A classifier is `tag` (u8: 0 constant,
//! 1 trees, 2 linear, 3 network), `rounds`, `best_round + 1` (0 = none),
//! `single_class` (u8), then
//!
//! * constant: `p`;
//! * trees: `base_score`, `n_trees`, per tree `n_nodes` and per node a u8
//!   (0 split, 1 leaf) followed by `feature, threshold, left, right` or `value`;
//! * linear: `n`, `n` weights, `bias`;
//! * network: see below.
//!
//! A network is `n_layers`, the layer sizes, `n_params` and the parameters.
//! Parametric payload: `head` (u8: 0 exponential, 1 log-normal), `epochs`,
//! `best_epoch + 1`, network.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wrse_core::learners::{
    BaseLearner, BinaryClassifier, ClassifierModel, GbtModel, LinearModel, Tree, TreeNode, TrainingInfo,
};
use wrse_core::nn::Mlp;
use wrse_core::parametric::{HeadKind, ParametricConfig, ParametricModel};
use wrse_core::weighting::Spacing;
use wrse_core::wrse::WrseModel;
use wrse_core::{BeyondSupport, Dataset, HorizonGrid};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"WRSEARCH";
pub const VERSION: u32 = 1;

const KIND_WRSE: u8 = 1;
const KIND_PARAMETRIC: u8 = 2;

/// SHA-256 over stay ids, event times, censor flags and feature values.
pub fn fingerprint(dataset: &Dataset) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((dataset.len() as u64).to_le_bytes());
    h.update((dataset.n_features() as u64).to_le_bytes());
    for s in dataset.stays() {
        h.update((s.stay_id.len() as u64).to_le_bytes());
        h.update(s.stay_id.as_bytes());
        h.update(s.event_time_hours().to_le_bytes());
        h.update([s.censored() as u8]);
        h.update((s.features().rows() as u64).to_le_bytes());
        for v in s.features().as_slice() {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub dataset: [u8; 32],
    pub split: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WrseMeta {
    base: BaseLearner,
    spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParametricMeta {
    config: Option<ParametricConfig>,
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        v.iter().for_each(|x| self.f64(*x));
    }
    fn opt(&mut self, v: Option<usize>) {
        self.u64(v.map_or(0, |x| x as u64 + 1));
    }
    fn header(&mut self, kind: u8, prov: Provenance, meta: &impl Serialize) {
        self.0.extend_from_slice(MAGIC);
        self.0.extend_from_slice(&VERSION.to_le_bytes());
        self.u8(kind);
        self.0.extend_from_slice(&prov.dataset);
        self.u64(prov.split);
        let json = serde_json::to_vec(meta).expect("archive metadata serializes");
        self.usize(json.len());
        self.0.extend_from_slice(&json);
    }
    fn mlp(&mut self, net: &Mlp) {
        self.usize(net.sizes().len());
        net.sizes().iter().for_each(|s| self.usize(*s));
        self.f64s(net.params());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("malformed model archive: {msg}"))
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> CliResult<u8> {
        Ok(self.take(1)?[0])
    }
    fn u64(&mut self) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn usize(&mut self) -> CliResult<usize> {
        usize::try_from(self.u64()?).map_err(|_| corrupt("count overflows usize"))
    }
    /// A count of items of at least `item_bytes` each, bounded by the bytes left.
    fn count(&mut self, item_bytes: usize) -> CliResult<usize> {
        let n = self.usize()?;
        if n.saturating_mul(item_bytes) > self.buf.len() - self.pos {
            return Err(corrupt(format!("count {n} exceeds the archive size")));
        }
        Ok(n)
    }
    fn f64(&mut self) -> CliResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64s(&mut self) -> CliResult<Vec<f64>> {
        let n = self.count(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn opt(&mut self) -> CliResult<Option<usize>> {
        Ok(self.usize()?.checked_sub(1))
    }
    fn header<M: serde::de::DeserializeOwned>(&mut self, kind: u8) -> CliResult<(Provenance, M)> {
        if self.take(8)? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let found = self.u8()?;
        if found != kind {
            return Err(corrupt(format!("expected model kind {kind}, found {found}")));
        }
        let dataset: [u8; 32] = self.take(32)?.try_into().expect("32 bytes");
        let split = self.u64()?;
        let len = self.count(1)?;
        let meta = serde_json::from_slice(self.take(len)?).map_err(|e| corrupt(format!("metadata: {e}")))?;
        Ok((Provenance { dataset, split }, meta))
    }
    fn mlp(&mut self) -> CliResult<Mlp> {
        let n = self.count(8)?;
        let sizes = (0..n).map(|_| self.usize()).collect::<CliResult<Vec<_>>>()?;
        let params = self.f64s()?;
        Mlp::from_params(&sizes, params).map_err(corrupt)
    }
    fn finish(&self) -> CliResult<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(corrupt(format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }
}

pub fn encode_wrse(model: &WrseModel, prov: Provenance) -> Vec<u8> {
    let mut w = Writer::default();
    let meta = WrseMeta {
        base: model.base().clone(),
        spacing: model.grid().spacing(),
    };
    w.header(KIND_WRSE, prov, &meta);
    w.f64s(model.grid().horizons_hours());
    w.u8(match model.beyond_last {
        BeyondSupport::Clamp => 0,
        BeyondSupport::Undefined => 1,
    });
    w.usize(model.n_features());
    for c in model.classifiers() {
        let tag = match &c.model {
            ClassifierModel::Constant(_) => 0,
            ClassifierModel::Gbt(_) => 1,
            ClassifierModel::Logistic(_) => 2,
            ClassifierModel::FeedForward(_) => 3,
        };
        w.u8(tag);
        w.usize(c.info.rounds);
        w.opt(c.info.best_round);
        w.u8(c.info.single_class as u8);
        match &c.model {
            ClassifierModel::Constant(p) => w.f64(*p),
            ClassifierModel::Gbt(m) => {
                w.f64(m.base_score);
                w.usize(m.trees.len());
                for t in &m.trees {
                    w.usize(t.nodes.len());
                    for n in &t.nodes {
                        match *n {
                            TreeNode::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            } => {
                                w.u8(0);
                                w.usize(feature);
                                w.f64(threshold);
                                w.usize(left);
                                w.usize(right);
                            }
                            TreeNode::Leaf { value } => {
                                w.u8(1);
                                w.f64(value);
                            }
                        }
                    }
                }
            }
            ClassifierModel::Logistic(m) => {
                w.f64s(&m.weights);
                w.f64(m.bias);
            }
            ClassifierModel::FeedForward(net) => w.mlp(net),
        }
    }
    w.0
}

fn read_tree(r: &mut Reader<'_>, n_features: usize) -> CliResult<Tree> {
    let n = r.count(9)?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        nodes.push(match r.u8()? {
            0 => TreeNode::Split {
                feature: r.usize()?,
                threshold: r.f64()?,
                left: r.usize()?,
                right: r.usize()?,
            },
            1 => TreeNode::Leaf { value: r.f64()? },
            t => return Err(corrupt(format!("unknown node tag {t}"))),
        });
    }
    // children must point forward so prediction terminates
    for (i, node) in nodes.iter().enumerate() {
        if let TreeNode::Split { feature, left, right, .. } = *node {
            if feature >= n_features || left <= i || right <= i || left >= n || right >= n {
                return Err(corrupt(format!("invalid split node {i}")));
            }
        }
    }
    if nodes.is_empty() {
        return Err(corrupt("empty tree"));
    }
    Ok(Tree { nodes })
}

pub fn decode_wrse(bytes: &[u8]) -> CliResult<(WrseModel, Provenance)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (prov, meta): (Provenance, WrseMeta) = r.header(KIND_WRSE)?;
    let horizons = r.f64s()?;
    let grid = HorizonGrid::new(horizons, meta.spacing).map_err(corrupt)?;
    let beyond_last = match r.u8()? {
        0 => BeyondSupport::Clamp,
        1 => BeyondSupport::Undefined,
        t => return Err(corrupt(format!("unknown beyond_last tag {t}"))),
    };
    let n_features = r.usize()?;
    let kind = meta.base.kind();
    let mut classifiers = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let tag = r.u8()?;
        let info = TrainingInfo {
            rounds: r.usize()?,
            best_round: r.opt()?,
            single_class: r.u8()? != 0,
        };
        let model = match tag {
            0 => ClassifierModel::Constant(r.f64()?),
            1 => {
                let base_score = r.f64()?;
                let n = r.count(8)?;
                let trees = (0..n).map(|_| read_tree(&mut r, n_features)).collect::<CliResult<_>>()?;
                ClassifierModel::Gbt(GbtModel { base_score, trees })
            }
            2 => {
                let weights = r.f64s()?;
                if weights.len() != n_features {
                    return Err(corrupt("linear model width differs from n_features"));
                }
                ClassifierModel::Logistic(LinearModel { weights, bias: r.f64()? })
            }
            3 => {
                let net = r.mlp()?;
                if net.n_inputs() != n_features || net.n_outputs() != 1 {
                    return Err(corrupt("network shape differs from the model"));
                }
                ClassifierModel::FeedForward(net)
            }
            t => return Err(corrupt(format!("unknown classifier tag {t}"))),
        };
        classifiers.push(BinaryClassifier {
            kind,
            n_features,
            model,
            info,
        });
    }
    r.finish()?;
    let model = WrseModel::from_parts(grid, classifiers, meta.base, beyond_last).map_err(corrupt)?;
    Ok((model, prov))
}

pub fn encode_parametric(model: &ParametricModel, config: Option<&ParametricConfig>, prov: Provenance) -> Vec<u8> {
    let mut w = Writer::default();
    w.header(
        KIND_PARAMETRIC,
        prov,
        &ParametricMeta {
            config: config.cloned(),
        },
    );
    w.u8(match model.head_kind() {
        HeadKind::Exponential => 0,
        HeadKind::LogNormal => 1,
    });
    w.usize(model.epochs);
    w.opt(model.best_epoch);
    w.mlp(model.net());
    w.0
}

pub fn decode_parametric(bytes: &[u8]) -> CliResult<(ParametricModel, Option<ParametricConfig>, Provenance)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (prov, meta): (Provenance, ParametricMeta) = r.header(KIND_PARAMETRIC)?;
    let head = match r.u8()? {
        0 => HeadKind::Exponential,
        1 => HeadKind::LogNormal,
        t => return Err(corrupt(format!("unknown head tag {t}"))),
    };
    let epochs = r.usize()?;
    let best_epoch = r.opt()?;
    let net = r.mlp()?;
    r.finish()?;
    let mut model = ParametricModel::from_parts(head, net).map_err(corrupt)?;
    model.epochs = epochs;
    model.best_epoch = best_epoch;
    Ok((model, meta.config, prov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use wrse_core::learners::{FfnetConfig, GbtConfig, LearnerKind, LogisticConfig};
    use wrse_core::weighting::weighted_horizons;

    const PROV: Provenance = Provenance {
        dataset: [7; 32],
        split: 3,
    };

    fn tree() -> Tree {
        Tree {
            nodes: vec![
                TreeNode::Split {
                    feature: 1,
                    threshold: 0.25,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { value: -0.125 },
                TreeNode::Leaf { value: 0.3 },
            ],
        }
    }

    fn model() -> WrseModel {
        let info = TrainingInfo {
            rounds: 12,
            best_round: Some(4),
            single_class: false,
        };
        let classifiers = vec![
            BinaryClassifier::constant(LearnerKind::GradientBoostedTrees, 2, 0.01),
            BinaryClassifier {
                kind: LearnerKind::GradientBoostedTrees,
                n_features: 2,
                model: ClassifierModel::Gbt(GbtModel {
                    base_score: -1.5,
                    trees: vec![tree(), tree()],
                }),
                info,
            },
            BinaryClassifier {
                kind: LearnerKind::GradientBoostedTrees,
                n_features: 2,
                model: ClassifierModel::Logistic(LinearModel {
                    weights: vec![0.1, f64::MIN_POSITIVE],
                    bias: 1.0 / 3.0,
                }),
                info,
            },
            BinaryClassifier {
                kind: LearnerKind::GradientBoostedTrees,
                n_features: 2,
                model: ClassifierModel::FeedForward(Mlp::seeded(&[2, 3, 1], 5).unwrap()),
                info,
            },
        ];
        WrseModel::from_parts(
            weighted_horizons(0.5, 4).unwrap(),
            classifiers,
            BaseLearner::Gbt(GbtConfig::large()),
            BeyondSupport::Clamp,
        )
        .unwrap()
    }

    #[test]
    fn wrse_round_trip_is_exact() {
        let m = model();
        let bytes = encode_wrse(&m, PROV);
        let (back, prov) = decode_wrse(&bytes).unwrap();
        assert_eq!(prov, PROV);
        assert_eq!(back, m);
        assert_eq!(encode_wrse(&back, prov), bytes);
        for x in [[0.0, 0.0], [1.0, 0.25], [-3.0, 7.5]] {
            assert_eq!(m.raw_predictions(&x).unwrap(), back.raw_predictions(&x).unwrap());
        }
    }

    #[test]
    fn parametric_round_trip_is_exact() {
        let net = Mlp::seeded(&[3, 4, 2], 1).unwrap();
        let mut m = ParametricModel::from_parts(HeadKind::LogNormal, net).unwrap();
        m.epochs = 40;
        m.best_epoch = Some(30);
        let cfg = ParametricConfig::large(HeadKind::LogNormal);
        let bytes = encode_parametric(&m, Some(&cfg), PROV);
        let (back, c, prov) = decode_parametric(&bytes).unwrap();
        assert_eq!((back, c, prov), (m, Some(cfg), PROV));
    }

    #[test]
    fn other_base_learners_survive_metadata() {
        for base in [
            BaseLearner::Logistic(LogisticConfig::default()),
            BaseLearner::FeedForward(FfnetConfig::large()),
        ] {
            let m = model();
            let m = WrseModel::from_parts(m.grid().clone(), m.classifiers().to_vec(), base.clone(), m.beyond_last)
                .unwrap();
            let (back, _) = decode_wrse(&encode_wrse(&m, PROV)).unwrap();
            assert_eq!(back.base(), &base);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode_wrse(&model(), PROV);
        for cut in [0, 7, 20, bytes.len() / 2, bytes.len() - 1] {
            assert_eq!(decode_wrse(&bytes[..cut]).unwrap_err().exit_code(), 3);
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_wrse(&bad).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_wrse(&long).is_err());
        assert!(decode_parametric(&bytes).is_err());
    }
}
