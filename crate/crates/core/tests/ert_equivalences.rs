//! Exact equivalences of weighted extra-trees. Features, targets and weights
//! are small dyadic rationals so that every sum is exact regardless of the
//! order in which samples are visited.

use iwfqi_core::ert::{ErtModel, ErtParams, FeatureMatrix};
use iwfqi_core::fqi::{ErtRegressor, Predictor};
use iwfqi_core::{greedy_action, ActionValues, TransitionSample, WeightedSample};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Data {
    rows: Vec<Vec<f64>>,
    y: Vec<f64>,
    w: Vec<f64>,
}

fn dyadic(k: i32) -> f64 {
    k as f64 / 64.0
}

fn data(max_n: usize) -> impl Strategy<Value = Data> {
    (1usize..4, 2usize..max_n).prop_flat_map(|(d, n)| {
        (
            prop::collection::vec(prop::collection::vec(0i32..256, d), n),
            prop::collection::vec(-128i32..128, n),
            prop::collection::vec(1i32..8, n),
        )
            .prop_map(|(rows, y, w)| Data {
                rows: rows.into_iter().map(|r| r.into_iter().map(dyadic).collect()).collect(),
                y: y.into_iter().map(dyadic).collect(),
                w: w.into_iter().map(|v| v as f64 / 4.0).collect(),
            })
    })
}

fn params(seed: u64, min_split: usize) -> ErtParams {
    ErtParams { n_estimators: 5, min_samples_split: min_split, n_candidate_splits: None, seed }
}

fn fit(d: &Data, p: &ErtParams) -> ErtModel {
    ErtModel::fit(&FeatureMatrix::from_rows(&d.rows).unwrap(), &d.y, &d.w, p).unwrap()
}

fn probes(d: &Data) -> Vec<Vec<f64>> {
    let dim = d.rows[0].len();
    let mut out = d.rows.clone();
    out.extend((0..40).map(|i| (0..dim).map(|j| ((i * 37 + j * 11) % 260) as f64 / 64.0).collect()));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_scaling_is_exact(d in data(60), seed in 0u64..1000, shift in -6i32..6, min_split in 2usize..6) {
        let c = 2f64.powi(shift);
        let scaled = Data { w: d.w.iter().map(|w| w * c).collect(), ..d.clone() };
        let p = params(seed, min_split);
        prop_assert_eq!(fit(&d, &p), fit(&scaled, &p));
    }

    #[test]
    fn duplicate_equals_double_weight(d in data(60), seed in 0u64..1000, pick in 0usize..1000, min_split in 2usize..6) {
        let i = pick % d.y.len();
        let mut dup = d.clone();
        dup.rows.push(d.rows[i].clone());
        dup.y.push(d.y[i]);
        dup.w.push(d.w[i]);
        let mut doubled = d.clone();
        doubled.w[i] *= 2.0;
        let p = params(seed, min_split);
        let (a, b) = (fit(&dup, &p), fit(&doubled, &p));
        for x in probes(&d) {
            prop_assert_eq!(a.predict_row(&x), b.predict_row(&x));
        }
    }

    #[test]
    fn zero_weights_are_inert(d in data(60), seed in 0u64..1000, mask in prop::collection::vec(any::<bool>(), 60)) {
        let keep: Vec<usize> = (0..d.y.len()).filter(|&i| !mask[i] || i == 0).collect();
        let mut zeroed = d.clone();
        for i in 0..d.y.len() {
            if !keep.contains(&i) {
                zeroed.w[i] = 0.0;
            }
        }
        let removed = Data {
            rows: keep.iter().map(|&i| d.rows[i].clone()).collect(),
            y: keep.iter().map(|&i| d.y[i]).collect(),
            w: keep.iter().map(|&i| d.w[i]).collect(),
        };
        let p = params(seed, 2);
        prop_assert_eq!(fit(&zeroed, &p), fit(&removed, &p));
    }

    #[test]
    fn equal_weights_match_unit_weights(d in data(60), seed in 0u64..1000, k in 1i32..20) {
        let unit = Data { w: vec![1.0; d.y.len()], ..d.clone() };
        let equal = Data { w: vec![k as f64; d.y.len()], ..d.clone() };
        let p = params(seed, 3);
        let (a, b) = (fit(&unit, &p), fit(&equal, &p));
        for x in probes(&d) {
            prop_assert_eq!(a.predict_row(&x), b.predict_row(&x));
        }
    }

    #[test]
    fn predictions_stay_in_target_range(d in data(80), seed in 0u64..1000) {
        let m = fit(&d, &params(seed, 2));
        let lo = d.y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for x in probes(&d) {
            let v = m.predict_row(&x);
            prop_assert!(v >= lo && v <= hi);
        }
    }

    /// A positive affine map of every target maps leaf values the same way
    /// (up to rounding), so the greedy action only changes at exact ties.
    #[test]
    fn greedy_action_survives_affine_targets(d in data(60), seed in 0u64..1000, scale in 1i32..8, offset in -64i32..64) {
        let actions = 3;
        let samples: Vec<WeightedSample> = d.rows.iter().zip(&d.y).enumerate().map(|(i, (r, &y))| WeightedSample::unit(TransitionSample {
            state: r.clone(), action: i % actions, next_state: r.clone(), reward: y, terminal: false, task_id: 0,
        })).collect();
        let reg = ErtRegressor { params: params(seed, 2), per_action: false, action_count: actions };
        let (a, b) = (scale as f64 / 2.0, dyadic(offset));
        let moved: Vec<f64> = d.y.iter().map(|y| a * y + b).collect();
        let q1 = iwfqi_core::fqi::QFunction::new(iwfqi_core::fqi::Regressor::fit(&reg, &samples, &d.y, &d.w, seed).unwrap(), actions, None);
        let q2 = iwfqi_core::fqi::QFunction::new(iwfqi_core::fqi::Regressor::fit(&reg, &samples, &moved, &d.w, seed).unwrap(), actions, None);
        for x in probes(&d) {
            for act in 0..actions {
                prop_assert!((q2.model().predict(&x, act) - (a * q1.q_value(&x, act) + b)).abs() <= 1e-12);
            }
            let mut values: Vec<f64> = (0..actions).map(|act| q1.q_value(&x, act)).collect();
            values.sort_by(|u, v| v.total_cmp(u));
            if values[0] - values[1] > 1e-9 {
                prop_assert_eq!(greedy_action(&q1, &x), greedy_action(&q2, &x));
            }
        }
    }
}
