//! Temporal cohort data: stays, hourly snapshots and flattened snapshot tables.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One ICU stay: hourly feature rows plus the observed event time.
///
/// Row `r` holds the features recorded at hour `r` since admission. Snapshots
/// taken after the last recorded row reuse that row (last observation carried
/// forward), so constant-feature stays only need a single row.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StayRecord {
    pub stay_id: String,
    features: Matrix,
    event_time_hours: f64,
    censored: bool,
}

impl StayRecord {
    pub fn new(
        stay_id: impl Into<String>,
        features: Matrix,
        event_time_hours: f64,
        censored: bool,
    ) -> Result<Self> {
        let stay_id = stay_id.into();
        if !(event_time_hours > 0.0 && event_time_hours.is_finite()) {
            return Err(Error::InvalidData(alloc::format!(
                "stay {stay_id}: event time must be positive and finite, got {event_time_hours}"
            )));
        }
        let k = features.rows();
        if k == 0 {
            return Err(Error::InvalidData(alloc::format!(
                "stay {stay_id}: at least one feature row is required"
            )));
        }
        if (k - 1) as f64 >= event_time_hours {
            return Err(Error::InvalidData(alloc::format!(
                "stay {stay_id}: feature row at hour {} is not before the event at {event_time_hours}h",
                k - 1
            )));
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(alloc::format!(
                "stay {stay_id}: features contain missing or non-finite values"
            )));
        }
        Ok(Self {
            stay_id,
            features,
            event_time_hours,
            censored,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn event_time_hours(&self) -> f64 {
        self.event_time_hours
    }

    pub fn censored(&self) -> bool {
        self.censored
    }

    /// Number of hourly snapshots: whole hours `t` with `t < event_time`.
    pub fn n_snapshots(&self) -> usize {
        libm::ceil(self.event_time_hours) as usize
    }

    /// Feature row in effect at hour `t`.
    pub fn features_at_hour(&self, t: usize) -> &[f64] {
        self.features.row(t.min(self.features.rows() - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    stays: Vec<StayRecord>,
    n_features: usize,
    pub split_tag: Option<SplitTag>,
}

impl Dataset {
    pub fn new(stays: Vec<StayRecord>, split_tag: Option<SplitTag>) -> Result<Self> {
        let n_features = stays.first().map_or(0, StayRecord::n_features);
        let mut seen = BTreeSet::new();
        for s in &stays {
            if s.n_features() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    found: s.n_features(),
                });
            }
            if !seen.insert(s.stay_id.as_str()) {
                return Err(Error::InvalidData(alloc::format!(
                    "duplicate stay_id {}",
                    s.stay_id
                )));
            }
        }
        Ok(Self {
            stays,
            n_features,
            split_tag,
        })
    }

    pub fn stays(&self) -> &[StayRecord] {
        &self.stays
    }

    pub fn len(&self) -> usize {
        self.stays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stays.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Contiguous block of stays in admission order.
    pub fn slice(&self, range: core::ops::Range<usize>, tag: SplitTag) -> Dataset {
        Dataset {
            stays: self.stays[range].to_vec(),
            n_features: self.n_features,
            split_tag: Some(tag),
        }
    }

    pub fn n_snapshots(&self) -> usize {
        self.stays.iter().map(StayRecord::n_snapshots).sum()
    }
}

/// The state of one stay at one whole hour, viewed as an independent instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot<'a> {
    pub stay_index: usize,
    pub stay_id: &'a str,
    pub t_hours: f64,
    pub x: &'a [f64],
    /// Remaining time to death or discharge.
    pub y_hours: f64,
    pub censored: bool,
}

/// Hourly snapshots of every stay, in stay order then time order.
pub fn snapshots_of(dataset: &Dataset) -> impl Iterator<Item = Snapshot<'_>> + '_ {
    dataset
        .stays
        .iter()
        .enumerate()
        .flat_map(|(stay_index, stay)| {
            (0..stay.n_snapshots()).map(move |t| Snapshot {
                stay_index,
                stay_id: &stay.stay_id,
                t_hours: t as f64,
                x: stay.features_at_hour(t),
                y_hours: stay.event_time_hours - t as f64,
                censored: stay.censored,
            })
        })
}

/// Snapshots flattened into columns for training and evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotTable {
    pub x: Matrix,
    pub y_hours: Vec<f64>,
    pub censored: Vec<bool>,
    pub t_hours: Vec<f64>,
    pub stay_index: Vec<usize>,
}

impl SnapshotTable {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let mut table = Self::empty(dataset.n_features());
        for s in snapshots_of(dataset) {
            table.push_unchecked(&s);
        }
        table
    }

    pub fn empty(n_features: usize) -> Self {
        Self {
            x: Matrix::with_cols(n_features),
            ..Default::default()
        }
    }

    /// Builds a table from bare `(x, y, censored)` rows, e.g. for fixtures.
    pub fn from_rows<R: AsRef<[f64]>>(x: &[R], y_hours: &[f64], censored: &[bool]) -> Result<Self> {
        if x.len() != y_hours.len() || x.len() != censored.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                found: y_hours.len().min(censored.len()),
            });
        }
        if let Some(&y) = y_hours.iter().find(|&&y| !(y > 0.0)) {
            return Err(Error::domain("y_hours", y));
        }
        let x = Matrix::from_rows(x)?;
        Ok(Self {
            t_hours: alloc::vec![0.0; x.rows()],
            stay_index: (0..x.rows()).collect(),
            x,
            y_hours: y_hours.to_vec(),
            censored: censored.to_vec(),
        })
    }

    fn push_unchecked(&mut self, s: &Snapshot<'_>) {
        self.x
            .push_row(s.x)
            .expect("snapshot width matches dataset width");
        self.y_hours.push(s.y_hours);
        self.censored.push(s.censored);
        self.t_hours.push(s.t_hours);
        self.stay_index.push(s.stay_index);
    }

    pub fn len(&self) -> usize {
        self.y_hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_hours.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(indices),
            y_hours: indices.iter().map(|&i| self.y_hours[i]).collect(),
            censored: indices.iter().map(|&i| self.censored[i]).collect(),
            t_hours: indices.iter().map(|&i| self.t_hours[i]).collect(),
            stay_index: indices.iter().map(|&i| self.stay_index[i]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stay(id: &str, event: f64, censored: bool) -> StayRecord {
        StayRecord::new(id, Matrix::from_rows(&[[0.0, 1.0]]).unwrap(), event, censored).unwrap()
    }

    #[test]
    fn hourly_slicing_of_a_fractional_stay() {
        let ds = Dataset::new(vec![stay("a", 2.5, false)], None).unwrap();
        let snaps: Vec<_> = snapshots_of(&ds).collect();
        let ty: Vec<_> = snaps.iter().map(|s| (s.t_hours, s.y_hours)).collect();
        assert_eq!(ty, vec![(0.0, 2.5), (1.0, 1.5), (2.0, 0.5)]);
    }

    #[test]
    fn whole_hour_event_excludes_zero_remaining_time() {
        let ds = Dataset::new(vec![stay("a", 1.0, false)], None).unwrap();
        let snaps: Vec<_> = snapshots_of(&ds).collect();
        assert_eq!(snaps.len(), 1);
        assert_eq!((snaps[0].t_hours, snaps[0].y_hours), (0.0, 1.0));
    }

    #[test]
    fn snapshot_count_sums_over_stays() {
        let ds = Dataset::new(
            vec![stay("a", 2.0, false), stay("b", 3.0, true), stay("c", 1.0, false)],
            None,
        )
        .unwrap();
        assert_eq!(snapshots_of(&ds).count(), 6);
        assert_eq!(ds.n_snapshots(), 6);
        assert!(snapshots_of(&ds).all(|s| s.y_hours > 0.0));
    }

    #[test]
    fn empty_dataset_has_no_snapshots() {
        let ds = Dataset::new(vec![], None).unwrap();
        assert_eq!(snapshots_of(&ds).count(), 0);
    }

    #[test]
    fn features_carry_forward_past_last_row() {
        let m = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let s = StayRecord::new("a", m, 4.5, true).unwrap();
        let ds = Dataset::new(vec![s], None).unwrap();
        let xs: Vec<f64> = snapshots_of(&ds).map(|s| s.x[0]).collect();
        assert_eq!(xs, vec![1.0, 2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn rejects_rows_at_or_after_event() {
        let m = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        assert!(StayRecord::new("a", m, 2.0, false).is_err());
    }

    #[test]
    fn rejects_missing_values_and_duplicates() {
        let m = Matrix::from_rows(&[[f64::NAN]]).unwrap();
        assert!(StayRecord::new("a", m, 2.0, false).is_err());
        assert!(Dataset::new(vec![stay("a", 2.0, false), stay("a", 3.0, false)], None).is_err());
    }

    #[test]
    fn snapshot_stream_is_deterministic() {
        let ds = Dataset::new(vec![stay("a", 5.5, false), stay("b", 2.5, true)], None).unwrap();
        let a: Vec<_> = snapshots_of(&ds).collect();
        let b: Vec<_> = snapshots_of(&ds).collect();
        assert_eq!(a, b);
        assert_eq!(SnapshotTable::from_dataset(&ds).len(), 9);
    }
}
