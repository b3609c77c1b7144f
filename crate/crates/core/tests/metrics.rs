mod common;

use std::collections::BTreeMap;

use common::{p_value_oracle, rank_oracle, rk_oracle, t_oracle, welford_std};
use format_robustness::methods::MethodTag;
use format_robustness::metrics::{
    aggregate, average_ranks_desc, mcc, one_sample_t_test, percentile, rank_methods, spread,
    spread_diff_test, std_over_formats, FormatSeries, MccCell, DEFAULT_ALPHA,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn mcc_matches_confusion_matrix_definition() {
    let mut r = rng(10);
    for i in 0..100 {
        let n = r.random_range(2..60);
        let gold: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let abstain = i % 4 == 0;
        let predicted: Vec<Option<usize>> = (0..n)
            .map(|_| {
                if abstain && r.random_bool(0.2) {
                    None
                } else {
                    Some(r.random_range(0..3))
                }
            })
            .collect();
        let got = mcc(&gold, &predicted, 3).unwrap();
        let expected = rk_oracle(&gold, &predicted, 3);
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }
}

#[test]
fn mcc_reference_values() {
    assert_eq!(
        mcc(&[0, 1, 2, 0], &[Some(0), Some(1), Some(2), Some(0)], 3).unwrap(),
        1.0
    );
    assert_eq!(mcc(&[0, 1, 0, 1], &[Some(0); 4], 2).unwrap(), 0.0);
    assert!(
        (mcc(&[0, 0, 1, 1], &[Some(1), Some(1), Some(0), Some(0)], 2).unwrap() + 1.0).abs() < 1e-12
    );
}

#[test]
fn std_matches_streaming_oracle() {
    let mut r = rng(11);
    for _ in 0..100 {
        let values: Vec<f64> = (0..r.random_range(2..30))
            .map(|_| r.random_range(0.0..1.0))
            .collect();
        assert!((std_over_formats(&values).unwrap() - welford_std(&values)).abs() < 1e-12);
        let max = values.iter().copied().fold(f64::MIN, f64::max);
        let min = values.iter().copied().fold(f64::MAX, f64::min);
        assert_eq!(spread(&values).unwrap(), max - min);
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn median_oracle(values: &[f64]) -> f64 {
    let v = sorted(values);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn aggregate_recomputed_over_52_tasks() {
    let mut r = rng(12);
    let methods = [
        MethodTag::FewShotRanking,
        MethodTag::BatchCalibration,
        MethodTag::SensitivityAware,
    ];
    let mut series = Vec::new();
    let mut raw: BTreeMap<MethodTag, Vec<Vec<f64>>> = BTreeMap::new();
    for t in 0..52 {
        for m in methods {
            let values: Vec<f64> = (0..10).map(|_| r.random_range(0.2..0.9)).collect();
            series.push(FormatSeries::new(
                "model",
                format!("task{t:03}"),
                m,
                &values,
            ));
            raw.entry(m).or_default().push(values);
        }
    }
    let rows = aggregate(&series).unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let tasks = &raw[&row.method];
        let mean = |f: &dyn Fn(&[f64]) -> f64| {
            tasks.iter().map(|v| f(v)).sum::<f64>() / tasks.len() as f64
        };
        assert_eq!(row.n_tasks, 52);
        assert!((row.mean_median - mean(&median_oracle)).abs() < 1e-12);
        assert!((row.mean_spread - mean(&|v| sorted(v)[v.len() - 1] - sorted(v)[0])).abs() < 1e-12);
        assert!((row.mean_std.unwrap() - mean(&welford_std)).abs() < 1e-12);
        assert!((row.error_bar().unwrap() - 2.0 * row.mean_std.unwrap()).abs() < 1e-15);
    }
}

#[test]
fn aggregate_rejects_missing_tasks() {
    let series = vec![
        FormatSeries::new("m", "a", MethodTag::FewShotRanking, &[0.5, 0.6]),
        FormatSeries::new("m", "b", MethodTag::FewShotRanking, &[0.5, 0.6]),
        FormatSeries::new("m", "a", MethodTag::BatchCalibration, &[0.5, 0.6]),
    ];
    assert!(aggregate(&series).is_err());
}

#[test]
fn t_test_matches_numeric_integration() {
    let mut r = rng(13);
    for _ in 0..100 {
        let n = r.random_range(3..40);
        let shift = r.random_range(-0.05..0.05);
        let d: Vec<f64> = (0..n).map(|_| shift + r.random_range(-0.1..0.1)).collect();
        let test = one_sample_t_test(&d).unwrap();
        let t = t_oracle(&d);
        assert!((test.t - t).abs() < 1e-9);
        assert!(
            (test.p - p_value_oracle(t, (n - 1) as f64)).abs() < 1e-6,
            "{} vs {}",
            test.p,
            p_value_oracle(t, (n - 1) as f64)
        );
    }
}

#[test]
fn joint_ranks_match_brute_force() {
    let methods = [
        MethodTag::FewShotRanking,
        MethodTag::BatchCalibration,
        MethodTag::TemplateEnsembleAvg,
        MethodTag::TemplateEnsembleVote,
        MethodTag::SensitivityAware,
    ];
    let mut r = rng(14);
    for _ in 0..20 {
        let mut cells = Vec::new();
        let mut expected: BTreeMap<MethodTag, f64> = BTreeMap::new();
        for model in ["m1", "m2", "m3"] {
            for task in ["t1", "t2", "t3", "t4"] {
                // coarse grid so ties occur
                let mccs: Vec<f64> = (0..5).map(|_| r.random_range(0..5) as f64 / 5.0).collect();
                for (i, m) in methods.iter().enumerate() {
                    cells.push(MccCell {
                        model: model.into(),
                        task: task.into(),
                        method: *m,
                        mcc: mccs[i],
                    });
                    *expected.entry(*m).or_default() += rank_oracle(&mccs, i) / 12.0;
                }
            }
        }
        cells.shuffle(&mut r);
        for rank in rank_methods(&cells).unwrap() {
            assert_eq!(rank.n_cells, 12);
            assert!((rank.mean_rank - expected[&rank.method]).abs() < 1e-12);
        }
    }
}

/// k-th order statistic by counting, without sorting.
fn order_stat(values: &[f64], k: usize) -> f64 {
    *values
        .iter()
        .find(|v| {
            let below = values.iter().filter(|w| w < v).count();
            let at = values.iter().filter(|w| w == v).count();
            below <= k && k < below + at
        })
        .unwrap()
}

#[test]
fn percentile_matches_order_statistics() {
    let mut r = rng(15);
    for _ in 0..100 {
        let values: Vec<f64> = (0..r.random_range(1..25))
            .map(|_| r.random_range(0.0..1.0))
            .collect();
        for q in [0.0, 5.0, 37.5, 50.0, 95.0, 100.0] {
            let h = q / 100.0 * (values.len() - 1) as f64;
            let lo = order_stat(&values, h.floor() as usize);
            let hi = order_stat(&values, h.ceil() as usize);
            let expected = lo + (h - h.floor()) * (hi - lo);
            assert!((percentile(&values, q).unwrap() - expected).abs() < 1e-12);
        }
    }
}

fn spreads_for(tasks: &[(String, Vec<f64>, Vec<f64>)]) -> (Vec<FormatSeries>, Vec<FormatSeries>) {
    tasks
        .iter()
        .map(|(t, b, m)| {
            (
                FormatSeries::new("m", t.clone(), MethodTag::FewShotRanking, b),
                FormatSeries::new("m", t.clone(), MethodTag::BatchCalibration, m),
            )
        })
        .unzip()
}

fn arb_tasks() -> impl Strategy<Value = Vec<(String, Vec<f64>, Vec<f64>)>> {
    proptest::collection::vec(
        (
            proptest::collection::vec(0.0f64..1.0, 2..6),
            proptest::collection::vec(0.0f64..1.0, 2..6),
        ),
        2..15,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (b, m))| (format!("task{i}"), b, m))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mcc_is_label_permutation_invariant(
        pairs in proptest::collection::vec((0usize..4, proptest::option::weighted(0.9, 0usize..4)), 1..50),
        seed in any::<u64>(),
    ) {
        let mut perm: Vec<usize> = (0..4).collect();
        perm.shuffle(&mut rng(seed));
        let gold: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<Option<usize>> = pairs.iter().map(|p| p.1).collect();
        let gold2: Vec<usize> = gold.iter().map(|g| perm[*g]).collect();
        let pred2: Vec<Option<usize>> = pred.iter().map(|p| p.map(|p| perm[p])).collect();
        let a = mcc(&gold, &pred, 4).unwrap();
        prop_assert!((a - mcc(&gold2, &pred2, 4).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn verdict_ignores_task_order(tasks in arb_tasks(), seed in any::<u64>()) {
        let (base, method) = spreads_for(&tasks);
        let mut shuffled = tasks.clone();
        shuffled.shuffle(&mut rng(seed));
        let (base2, method2) = spreads_for(&shuffled);
        let a = spread_diff_test("m", &base, &method, DEFAULT_ALPHA);
        let b = spread_diff_test("m", &base2, &method2, DEFAULT_ALPHA);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.verdict, b.verdict);
                prop_assert!((a.mean_diff - b.mean_diff).abs() < 1e-12);
                prop_assert!((a.p - b.p).abs() < 1e-9 || (a.p.is_nan() && b.p.is_nan()));
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn aggregate_ignores_format_ids(tasks in arb_tasks(), offset in 1usize..1000) {
        let (base, _) = spreads_for(&tasks);
        let relabeled: Vec<FormatSeries> = base
            .iter()
            .map(|s| {
                let mut s = s.clone();
                let n = s.values.len();
                s.values = s.values.values().enumerate().map(|(i, v)| ((n - i) * offset, *v)).collect();
                s
            })
            .collect();
        let a = aggregate(&base).unwrap();
        let b = aggregate(&relabeled).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.mean_median - y.mean_median).abs() < 1e-12);
            prop_assert!((x.mean_spread - y.mean_spread).abs() < 1e-12);
            prop_assert!((x.mean_std.unwrap() - y.mean_std.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn ranks_sum_to_the_triangular_number(values in proptest::collection::vec(-1.0f64..1.0, 1..10)) {
        let ranks = average_ranks_desc(&values);
        let n = values.len() as f64;
        prop_assert!((ranks.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        for (i, r) in ranks.iter().enumerate() {
            prop_assert_eq!(*r, rank_oracle(&values, i));
        }
    }
}
