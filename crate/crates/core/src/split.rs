//! Temporal train/validation/test splits over stays in admission order.
//!
//! A window of `n - (n_splits - 1) * step` stays slides forward by
//! `step = floor(roll_frac * n)` stays per replicate; inside each window the
//! first stays train, the next validate and the latest are tested, so every
//! test stay was admitted after every training stay of its split.

use alloc::vec::Vec;
use core::ops::Range;

use crate::data::{Dataset, SplitTag};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SplitConfig {
    pub n_splits: usize,
    pub train_frac: f64,
    pub valid_frac: f64,
    pub test_frac: f64,
    /// Window shift between replicates, as a fraction of all stays.
    pub roll_frac: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            n_splits: 5,
            train_frac: 0.6,
            valid_frac: 0.2,
            test_frac: 0.2,
            roll_frac: 0.05,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("split: {what}")));
        if self.n_splits == 0 {
            return bad("n_splits must be positive");
        }
        for (name, f) in [
            ("train_frac", self.train_frac),
            ("valid_frac", self.valid_frac),
            ("test_frac", self.test_frac),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidConfig(alloc::format!("split: {name} must lie in (0, 1)")));
            }
        }
        if (self.train_frac + self.valid_frac + self.test_frac - 1.0).abs() > 1e-9 {
            return bad("fractions must sum to 1");
        }
        if !(self.roll_frac >= 0.0 && self.roll_frac < 1.0) {
            return bad("roll_frac must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TemporalSplit {
    pub index: usize,
    pub train: Range<usize>,
    pub valid: Range<usize>,
    pub test: Range<usize>,
}

pub fn temporal_splits(n_stays: usize, config: &SplitConfig) -> Result<Vec<TemporalSplit>> {
    config.validate()?;
    let step = (config.roll_frac * n_stays as f64) as usize;
    let shift = (config.n_splits - 1) * step;
    if shift >= n_stays {
        return Err(Error::InvalidConfig(alloc::format!(
            "split: {n_stays} stays cannot hold {} windows shifted by {step}",
            config.n_splits
        )));
    }
    let window = n_stays - shift;
    let n_train = libm::round(window as f64 * config.train_frac) as usize;
    let n_valid = libm::round(window as f64 * config.valid_frac) as usize;
    if n_train == 0 || n_valid == 0 || n_train + n_valid >= window {
        return Err(Error::InvalidConfig(alloc::format!(
            "split: window of {window} stays leaves an empty part"
        )));
    }
    Ok((0..config.n_splits)
        .map(|index| {
            let start = index * step;
            TemporalSplit {
                index,
                train: start..start + n_train,
                valid: start + n_train..start + n_train + n_valid,
                test: start + n_train + n_valid..start + window,
            }
        })
        .collect())
}

/// `(train, validation, test)` datasets of one split.
pub fn apply_split(dataset: &Dataset, split: &TemporalSplit) -> Result<(Dataset, Dataset, Dataset)> {
    if split.test.end > dataset.len() {
        return Err(Error::LengthMismatch {
            expected: split.test.end,
            found: dataset.len(),
        });
    }
    Ok((
        dataset.slice(split.train.clone(), SplitTag::Train),
        dataset.slice(split.valid.clone(), SplitTag::Validation),
        dataset.slice(split.test.clone(), SplitTag::Test),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_rolls_five_windows() {
        let s = temporal_splits(2000, &SplitConfig::default()).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0].train, 0..960);
        assert_eq!(s[0].valid, 960..1280);
        assert_eq!(s[0].test, 1280..1600);
        assert_eq!(s[4].test.end, 2000);
    }

    #[test]
    fn invalid_configs() {
        let c = SplitConfig { n_splits: 0, ..Default::default() };
        assert!(temporal_splits(100, &c).is_err());
        let c = SplitConfig { train_frac: 0.7, ..Default::default() };
        assert!(temporal_splits(100, &c).is_err());
        assert!(temporal_splits(3, &SplitConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn tests_come_after_training(n in 20usize..5000, k in 1usize..8) {
            let cfg = SplitConfig { n_splits: k, ..Default::default() };
            if let Ok(splits) = temporal_splits(n, &cfg) {
                for s in splits {
                    prop_assert!(s.train.end <= s.valid.start && s.valid.end <= s.test.start);
                    prop_assert!(!s.train.is_empty() && !s.valid.is_empty() && !s.test.is_empty());
                    prop_assert!(s.test.end <= n);
                }
            }
        }
    }
}
