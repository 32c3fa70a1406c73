//! Cross-module properties: synthetic cohort through splitting, WRSE
//! training, recalibration and metrics.

use proptest::prelude::*;
use wrse_core::learners::{BaseLearner, LogisticConfig};
use wrse_core::metrics::{evaluate, EvalInstance, MetricConfig};
use wrse_core::recalibration::CurveRecalibrator;
use wrse_core::split::{apply_split, temporal_splits, SplitConfig};
use wrse_core::synth::{generate, Scenario};
use wrse_core::weighting::weighted_horizons;
use wrse_core::wrse::fit_wrse;
use wrse_core::{snapshots_of, SurvivalFn};

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trained_ensembles_give_valid_curves_and_metrics(seed in 0u64..1000, k in 2usize..6) {
        let scenario = Scenario { seed, ..Scenario::default() };
        let cohort = generate(&scenario, 120).unwrap();
        let split = &temporal_splits(cohort.dataset.len(), &SplitConfig { n_splits: 1, ..SplitConfig::default() }).unwrap()[0];
        let (train, valid, test) = apply_split(&cohort.dataset, split).unwrap();
        let grid = weighted_horizons(0.5, k).unwrap();
        let base = BaseLearner::Logistic(LogisticConfig { max_epochs: 50, ..LogisticConfig::default() });
        let model = fit_wrse(&train, &valid, &grid, &base).unwrap();

        let mut inst = Vec::new();
        for s in snapshots_of(&test) {
            let curve = model.predict_cdf(s.x).unwrap();
            let v = curve.cdf_values();
            prop_assert_eq!(v.len(), k);
            prop_assert!(v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(|&p| unit(p)));
            inst.push(EvalInstance::new(curve, s.y_hours, s.censored));
        }
        let report = evaluate(&inst, &MetricConfig::default()).unwrap();
        for w in &report.weighted {
            prop_assert!(unit(w.ctd_w) || w.ctd_w.is_nan());
            prop_assert!(unit(w.cal_w));
        }

        // recalibrated curves stay monotone CDFs
        let valid_inst: Vec<_> = snapshots_of(&valid)
            .map(|s| EvalInstance::new(model.predict_cdf(s.x).unwrap(), s.y_hours, s.censored))
            .collect();
        let knots: Vec<f64> = (1..=48).map(f64::from).collect();
        let recal = CurveRecalibrator::fit(&valid_inst, &knots).unwrap();
        for i in inst.iter().take(50) {
            let fixed = recal.apply(&i.curve).unwrap();
            let v: Vec<f64> = knots.iter().map(|&t| fixed.cdf_at(t).unwrap()).collect();
            prop_assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-12) && v.iter().all(|&p| unit(p)));
        }
    }
}
