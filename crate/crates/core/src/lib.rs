//! Dynamic individual survival distributions from ensembles of fixed-horizon
//! classifiers.
//!
//! The crate is `no_std` (with `alloc`) so the numerical core can be embedded
//! anywhere; file formats, worker pools and the command line live in the
//! `wrse-cli` companion crate.
//!
//! Main entry points:
//!
//! * [`wrse::fit_wrse`] / [`wrse::WrseModel::predict_cdf`]: the weighted
//!   resolution survival ensemble.
//! * [`parametric`]: exponential and log-normal heads trained on Survival-CRPS.
//! * [`metrics`]: time-weighted calibration area and concordance.
//! * [`synth`]: censored cohorts with known ground-truth survival.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is how inputs reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod curve;
pub mod data;
pub mod error;
pub mod importance;
pub mod isotonic;
pub mod learners;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod parametric;
pub mod recalibration;
pub mod split;
pub mod synth;
pub mod weighting;
pub mod wrse;

pub use curve::{BeyondSupport, SurvivalCurve, SurvivalFn};
pub use data::{snapshots_of, Dataset, Snapshot, SnapshotTable, SplitTag, StayRecord};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use weighting::{DecayWeighting, HorizonGrid, Spacing};

/// Hours per day; the decay weighting is defined on days.
pub const HOURS_PER_DAY: f64 = 24.0;
