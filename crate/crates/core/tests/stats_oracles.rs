use std::collections::BTreeMap;

use causal_survey::baselines::{
    correlation_screen, midranks, neutral_test, neutral_tests, t_two_sided_p, CorrelationMethod, Stars,
};
use causal_survey::effects::{estimate_intervention, hierarchy, partition_variables, rank_interventions, EffectConfig};
use causal_survey::graph::{cpdag_from_dag, Dag, Pdag};
use causal_survey::ingest::{Dataset, VariableKind, VariableSpec};
use causal_survey::par::Parallelism;
use causal_survey::synth::{likertize, random_dag, recovery_metrics, sample, shd, Scm, DEFAULT_CUTPOINTS};
use causal_survey_testkit::{
    naive_ranks, pearson, spearman, t_test_column, t_two_sided_p_quadrature, T_TAIL_REFERENCE, T_TEST_REFERENCE,
};
use proptest::prelude::*;

fn likert(columns: Vec<Vec<f64>>) -> Dataset {
    let specs = (0..columns.len())
        .map(|j| VariableSpec::new(format!("V{j}"), VariableKind::Likert7, "test"))
        .collect();
    Dataset::from_columns(specs, columns)
}

fn numeric(columns: Vec<Vec<f64>>) -> Dataset {
    let specs = (0..columns.len())
        .map(|j| VariableSpec::new(format!("V{j}"), VariableKind::Numeric, "test"))
        .collect();
    Dataset::from_columns(specs, columns)
}

#[test]
fn group_contrast_matches_direct_means() {
    // X -> Y on a Likert scale; the point estimate is a plain difference of means
    let x: Vec<f64> = (0..400).map(|i| (1 + i % 7) as f64).collect();
    let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (v + (i % 3) as f64 - 1.0).clamp(1.0, 7.0)).collect();
    let data = likert(vec![x.clone(), y.clone()]);
    let r = estimate_intervention(&data, 0, &EffectConfig::default()).unwrap();
    let mean = |rows: Vec<usize>, col: &[f64]| rows.iter().map(|&i| col[i]).sum::<f64>() / rows.len() as f64;
    let high: Vec<usize> = (0..400).filter(|&i| x[i] >= 5.0).collect();
    let low: Vec<usize> = (0..400).filter(|&i| x[i] <= 3.0).collect();
    let want = mean(high.clone(), &y) - mean(low.clone(), &y);
    assert!((r.per_variable_effect[1] - want).abs() < 1e-12);
    assert_eq!(r.n_high, high.len());
    assert_eq!(r.n_low, low.len());
    assert!(r.ci_low[1] <= r.per_variable_effect[1] && r.per_variable_effect[1] <= r.ci_high[1]);
    assert!(r.ci_low[1] > 0.0);
    assert!((r.mean_abs_effect - want.abs()).abs() < 1e-12);
}

#[test]
fn swapped_thresholds_negate_exactly() {
    let data = likertize(&sample(&Scm::chain(3, 0.8), 800, 3), &DEFAULT_CUTPOINTS).unwrap();
    let cfg = EffectConfig {
        resamples: 200,
        ..EffectConfig::default()
    };
    let a = estimate_intervention(&data, 0, &cfg).unwrap();
    let swapped = EffectConfig {
        high_threshold: 3.0,
        low_threshold: 5.0,
        ..cfg
    };
    let b = estimate_intervention(&data, 0, &swapped).unwrap();
    for j in 0..3 {
        assert_eq!(a.per_variable_effect[j], -b.per_variable_effect[j]);
        assert_eq!(a.ci_low[j], -b.ci_high[j]);
        assert_eq!(a.ci_high[j], -b.ci_low[j]);
    }
}

#[test]
fn effects_are_seeded_and_mode_independent() {
    let data = likertize(&sample(&Scm::chain(4, 0.8), 600, 1), &DEFAULT_CUTPOINTS).unwrap();
    let g = cpdag_from_dag(&Dag::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap());
    let seq = EffectConfig {
        resamples: 100,
        parallelism: Parallelism::Sequential,
        ..EffectConfig::default()
    };
    let par = EffectConfig {
        parallelism: Parallelism::Parallel,
        ..seq.clone()
    };
    let a = rank_interventions(&data, &g, &seq).unwrap();
    let b = rank_interventions(&data, &g, &par).unwrap();
    assert_eq!(format!("{:?}", a.entries), format!("{:?}", b.entries));
    let other = EffectConfig { seed: 1, ..seq };
    let c = rank_interventions(&data, &g, &other).unwrap();
    assert_ne!(format!("{:?}", a.entries), format!("{:?}", c.entries));
}

#[test]
fn root_intervention_moves_the_leaf() {
    let z = causal_survey::ingest::standardize(&sample(&Scm::chain(4, 0.8), 5000, 2)).unwrap();
    let data = likertize(&z, &DEFAULT_CUTPOINTS).unwrap();
    let r = estimate_intervention(&data, 0, &EffectConfig::default()).unwrap();
    assert!(r.ci_low[3] > 0.0, "{:?}", r);
}

#[test]
fn degenerate_split_is_reported_per_target() {
    let data = likert(vec![vec![4.0; 20], (0..20).map(|i| (1 + i % 7) as f64).collect()]);
    let g = Pdag::from_edges(2, &[], &[(0, 1)]).unwrap();
    let ranking = rank_interventions(&data, &g, &EffectConfig { resamples: 10, ..EffectConfig::default() }).unwrap();
    assert!(ranking.entries.iter().any(|e| e.target == 0 && e.outcome.is_err()));
    assert!(ranking.entries.iter().any(|e| e.target == 1 && e.outcome.is_ok()));
}

#[test]
fn partition_and_hierarchy_on_chain() {
    let g = Pdag::from_dag(&Dag::from_edges(4, &[(0, 1), (1, 2)]).unwrap());
    let part = partition_variables(&g);
    assert_eq!(part.associated, vec![0, 1, 2]);
    assert_eq!(part.independent, vec![3]);
    let h = hierarchy(&g).unwrap();
    assert_eq!(h.depth[..3], [0, 1, 2]);
    assert_eq!(h.ancestry_score[..3], [2, 0, -2]);
    assert_eq!(h.most_ancestor, Some(0));
    assert_eq!(h.most_descendant, Some(2));
    assert!(!h.ambiguous);
}

#[test]
fn t_test_matches_reference_values() {
    for (n, mean, t, p) in T_TEST_REFERENCE {
        let data = likert(vec![t_test_column(n)]);
        let r = neutral_test(&data, 0, 4.0).unwrap();
        assert!((r.effect_size - (mean - 4.0)).abs() < 1e-12);
        assert!((r.t_statistic - t).abs() < 1e-12, "{} vs {t}", r.t_statistic);
        assert!((r.p_value - p).abs() < 1e-6, "{} vs {p}", r.p_value);
    }
}

#[test]
fn t_tail_matches_quadrature_and_reference() {
    for (t, df, p) in T_TAIL_REFERENCE {
        assert!((t_two_sided_p(t, df) - p).abs() < 1e-6 * p.max(1e-3));
        assert!((t_two_sided_p(t, df) - t_two_sided_p_quadrature(t, df)).abs() < 1e-8);
    }
    for df in [2.0, 7.0, 40.0] {
        for t in [0.0, 0.5, 1.7, 3.3] {
            assert!((t_two_sided_p(t, df) - t_two_sided_p_quadrature(t, df)).abs() < 1e-8);
        }
    }
}

#[test]
fn stars_thresholds() {
    assert_eq!(Stars::from_p(0.2), Stars::None);
    assert_eq!(Stars::from_p(0.04), Stars::One);
    assert_eq!(Stars::from_p(0.009), Stars::Two);
    assert_eq!(Stars::from_p(0.0009), Stars::Three);
}

#[test]
fn bonferroni_scales_p_values() {
    let data = likert(vec![t_test_column(30), t_test_column(300)[..30].to_vec(), t_test_column(5).repeat(6)]);
    let plain = neutral_tests(&data, 4.0, false, Parallelism::Sequential).unwrap();
    let corrected = neutral_tests(&data, 4.0, true, Parallelism::Sequential).unwrap();
    for (a, b) in plain.iter().zip(&corrected) {
        assert!((b.p_value - (a.p_value * 3.0).min(1.0)).abs() < 1e-15);
    }
}

#[test]
fn correlation_matrix_matches_brute_force() {
    let s = Scm::with_random_weights(random_dag(6, 2.0, 4), 0.5, 1.0, 4);
    let data = likertize(&sample(&s, 300, 4), &DEFAULT_CUTPOINTS).unwrap();
    for method in [CorrelationMethod::Pearson, CorrelationMethod::Spearman] {
        let screen = correlation_screen(&data, method, 0.3, Parallelism::Parallel).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = match method {
                    CorrelationMethod::Pearson => pearson(data.column(i), data.column(j)),
                    CorrelationMethod::Spearman => spearman(data.column(i), data.column(j)),
                };
                assert!((screen.r(i, j) - want).abs() < 1e-12, "{method:?} ({i},{j})");
            }
        }
        for pair in &screen.strong_pairs {
            assert!(pair.i < pair.j && pair.r.abs() > 0.3);
        }
        let count = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).filter(|&(i, j)| screen.r(i, j).abs() > 0.3).count();
        assert_eq!(screen.strong_pairs.len(), count);
    }
}

#[test]
fn zero_variance_columns_are_flagged() {
    let data = numeric(vec![vec![1.0; 10], (0..10).map(f64::from).collect()]);
    let screen = correlation_screen(&data, CorrelationMethod::Pearson, 0.5, Parallelism::Sequential).unwrap();
    assert_eq!(screen.zero_variance, vec![0]);
    assert_eq!(screen.r(0, 1), 0.0);
}

#[test]
fn synthetic_edgeless_data_is_uncorrelated() {
    let s = Scm::new(Dag::empty(8), BTreeMap::new(), vec![1.0; 8]).unwrap();
    let data = sample(&s, 10_000, 21);
    let screen = correlation_screen(&data, CorrelationMethod::Pearson, 0.05, Parallelism::Sequential).unwrap();
    let max = (0..8).flat_map(|i| (i + 1..8).map(move |j| (i, j))).map(|(i, j)| screen.r(i, j).abs()).fold(0.0, f64::max);
    assert!(max < 0.05, "max |r| {max}");
}

#[test]
fn likertizing_preserves_rank_order() {
    let z = causal_survey::ingest::standardize(&sample(&Scm::chain(3, 0.8), 3000, 6)).unwrap();
    let l = likertize(&z, &DEFAULT_CUTPOINTS).unwrap();
    for j in 0..3 {
        assert!(spearman(z.column(j), l.column(j)) >= 0.9);
        assert!(l.column(j).iter().all(|&v| (1.0..=7.0).contains(&v) && v.fract() == 0.0));
    }
}

#[test]
fn recovery_metrics_on_known_graphs() {
    let truth = Dag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
    let perfect = recovery_metrics(&truth, &cpdag_from_dag(&truth)).unwrap();
    assert_eq!(perfect.shd, 0);
    assert_eq!((perfect.skeleton_precision, perfect.skeleton_recall, perfect.orientation_accuracy), (1.0, 1.0, 1.0));
    let chain = Pdag::from_edges(3, &[], &[(0, 2), (1, 2)]).unwrap();
    let m = recovery_metrics(&truth, &chain).unwrap();
    assert_eq!(m.shd, 2);
    assert_eq!((m.skeleton_precision, m.skeleton_recall), (1.0, 1.0));
    let empty = Pdag::new(3);
    assert_eq!(shd(&cpdag_from_dag(&truth), &empty).unwrap(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn midranks_match_naive(v in proptest::collection::vec(0i32..6, 1..40)) {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        prop_assert_eq!(midranks(&v), naive_ranks(&v));
    }

    #[test]
    fn pearson_is_affine_invariant(
        cols in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 20), 2),
        a in 0.1f64..10.0, b in -10.0f64..10.0,
    ) {
        let base = numeric(cols.clone());
        let scaled = numeric(vec![cols[0].iter().map(|v| a * v + b).collect(), cols[1].clone()]);
        let r0 = correlation_screen(&base, CorrelationMethod::Pearson, 0.5, Parallelism::Sequential).unwrap().r(0, 1);
        let r1 = correlation_screen(&scaled, CorrelationMethod::Pearson, 0.5, Parallelism::Sequential).unwrap().r(0, 1);
        prop_assert!((r0 - r1).abs() < 1e-9);
    }

    #[test]
    fn spearman_is_monotone_invariant(cols in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 20), 2)) {
        let base = numeric(cols.clone());
        let warped = numeric(vec![cols[0].iter().map(|v| v.exp()).collect(), cols[1].iter().map(|v| v * v * v).collect()]);
        let r0 = correlation_screen(&base, CorrelationMethod::Spearman, 0.5, Parallelism::Sequential).unwrap().r(0, 1);
        let r1 = correlation_screen(&warped, CorrelationMethod::Spearman, 0.5, Parallelism::Sequential).unwrap().r(0, 1);
        prop_assert!((r0 - r1).abs() < 1e-12);
    }

    #[test]
    fn correlations_are_bounded_and_symmetric(seed in 0u64..500) {
        let s = Scm::with_random_weights(random_dag(5, 2.0, seed), 0.5, 1.0, seed);
        let data = sample(&s, 50, seed);
        let screen = correlation_screen(&data, CorrelationMethod::Spearman, 0.5, Parallelism::Sequential).unwrap();
        for i in 0..5 {
            prop_assert!((screen.r(i, i) - 1.0).abs() < 1e-12);
            for j in 0..5 {
                prop_assert_eq!(screen.r(i, j), screen.r(j, i));
                prop_assert!(screen.r(i, j).abs() <= 1.0 + 1e-12);
            }
        }
    }
}
