//! Predicted survival curves.

use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

/// Anything that yields a CDF `F(tau) = Pr[T < tau]` for horizons in hours.
pub trait SurvivalFn {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64>;

    fn survival_at(&self, tau_hours: f64) -> Result<f64> {
        Ok(1.0 - self.cdf_at(tau_hours)?)
    }
}

impl<T: SurvivalFn + ?Sized> SurvivalFn for &T {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        (**self).cdf_at(tau_hours)
    }
}

/// What to do with queries past the last knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BeyondSupport {
    /// Hold the last knot value (counted by [`clamped_query_count`]).
    #[default]
    Clamp,
    /// Refuse with [`Error::QueryBeyondSupport`].
    Undefined,
}

static CLAMPED_QUERIES: AtomicUsize = AtomicUsize::new(0);

/// Number of curve queries answered by clamping past the last knot, process wide.
pub fn clamped_query_count() -> usize {
    CLAMPED_QUERIES.load(Ordering::Relaxed)
}

/// Monotone CDF given at knots, linearly interpolated from `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalCurve {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    beyond_last: BeyondSupport,
}

impl SurvivalCurve {
    pub fn new(knots: Vec<f64>, cdf: Vec<f64>, beyond_last: BeyondSupport) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::EmptyInput);
        }
        if knots.len() != cdf.len() {
            return Err(Error::LengthMismatch {
                expected: knots.len(),
                found: cdf.len(),
            });
        }
        if !(knots[0] > 0.0) {
            return Err(Error::domain("first knot", knots[0]));
        }
        if let Some(w) = knots.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::domain("knots must be strictly ascending at", w[1]));
        }
        if let Some(&v) = cdf.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain("cdf value", v));
        }
        if let Some(w) = cdf.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::domain("cdf must be nondecreasing at", w[1]));
        }
        Ok(Self {
            knots,
            cdf,
            beyond_last,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn beyond_last(&self) -> BeyondSupport {
        self.beyond_last
    }

    pub fn last_knot(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// `F(tau)`: linear between `(0, 0)` and the knots, then the beyond-support rule.
    pub fn evaluate(&self, tau_hours: f64) -> Result<f64> {
        if !(tau_hours >= 0.0) {
            return Err(Error::domain("tau_hours", tau_hours));
        }
        let last = self.last_knot();
        if tau_hours > last {
            return match self.beyond_last {
                BeyondSupport::Clamp => {
                    CLAMPED_QUERIES.fetch_add(1, Ordering::Relaxed);
                    Ok(self.cdf[self.cdf.len() - 1])
                }
                BeyondSupport::Undefined => Err(Error::QueryBeyondSupport {
                    tau: tau_hours,
                    last,
                }),
            };
        }
        // first knot >= tau
        let j = self.knots.partition_point(|&k| k < tau_hours);
        if self.knots[j] == tau_hours {
            return Ok(self.cdf[j]);
        }
        let (k0, f0) = if j == 0 {
            (0.0, 0.0)
        } else {
            (self.knots[j - 1], self.cdf[j - 1])
        };
        let (k1, f1) = (self.knots[j], self.cdf[j]);
        let w = (tau_hours - k0) / (k1 - k0);
        Ok((f0 + w * (f1 - f0)).clamp(f0, f1))
    }
}

impl SurvivalFn for SurvivalCurve {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        self.evaluate(tau_hours)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn example(beyond: BeyondSupport) -> SurvivalCurve {
        SurvivalCurve::new(vec![24.0, 48.0], vec![0.2, 0.4], beyond).unwrap()
    }

    #[test]
    fn knot_midpoint_and_clamp() {
        let c = example(BeyondSupport::Clamp);
        assert_eq!(c.evaluate(24.0).unwrap(), 0.2);
        assert!((c.evaluate(36.0).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(c.evaluate(100.0).unwrap(), 0.4);
        assert_eq!(c.evaluate(0.0).unwrap(), 0.0);
        assert!((c.evaluate(12.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn strict_mode_refuses_beyond_support() {
        let c = example(BeyondSupport::Undefined);
        assert!(matches!(
            c.evaluate(48.5),
            Err(Error::QueryBeyondSupport { .. })
        ));
        assert_eq!(c.evaluate(48.0).unwrap(), 0.4);
    }

    #[test]
    fn clamping_is_counted() {
        let c = example(BeyondSupport::Clamp);
        let before = clamped_query_count();
        c.evaluate(1000.0).unwrap();
        assert!(clamped_query_count() > before);
    }

    #[test]
    fn invalid_curves_are_rejected() {
        let b = BeyondSupport::Clamp;
        assert!(SurvivalCurve::new(vec![24.0, 24.0], vec![0.1, 0.2], b).is_err());
        assert!(SurvivalCurve::new(vec![24.0, 48.0], vec![0.3, 0.2], b).is_err());
        assert!(SurvivalCurve::new(vec![24.0], vec![1.2], b).is_err());
        assert!(SurvivalCurve::new(vec![0.0], vec![0.2], b).is_err());
        assert!(example(b).evaluate(-1.0).is_err());
    }

    fn arb_curve() -> impl Strategy<Value = SurvivalCurve> {
        prop::collection::vec((0.1f64..50.0, 0.0f64..1.0), 1..12).prop_map(|pts| {
            let mut h = 0.0;
            let mut knots = vec![];
            let mut cdf: Vec<f64> = pts.iter().map(|p| p.1).collect();
            cdf.sort_by(f64::total_cmp);
            for (dh, _) in pts {
                h += dh;
                knots.push(h);
            }
            SurvivalCurve::new(knots, cdf, BeyondSupport::Clamp).unwrap()
        })
    }

    proptest! {
        #[test]
        fn evaluation_is_monotone(c in arb_curve(), a in 0.0f64..700.0, b in 0.0f64..700.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(c.evaluate(lo).unwrap() <= c.evaluate(hi).unwrap());
        }

        #[test]
        fn survival_complements_cdf_exactly(c in arb_curve(), tau in 0.0f64..700.0) {
            let f = c.cdf_at(tau).unwrap();
            let s = c.survival_at(tau).unwrap();
            prop_assert_eq!(s + f, 1.0);
        }
    }
}
