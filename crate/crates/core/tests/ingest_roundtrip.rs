use causal_survey::graph::Dag;
use causal_survey::ingest::{
    apply_schema, complete_cases, load_schema, load_table, parse_schema, parse_table, render_schema, standardize,
    Dataset, IngestError, VariableKind, VariableSpec,
};
use causal_survey::score::ScoreContext;
use causal_survey::synth::{random_dag, sample, Scm};
use causal_survey_testkit::{gauss_solve, pearson};
use proptest::prelude::*;
use std::io::Write;

fn kind() -> impl Strategy<Value = VariableKind> {
    prop_oneof![Just(VariableKind::Likert7), Just(VariableKind::Numeric)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_and_schema_round_trip(
        kinds in proptest::collection::vec(kind(), 1..6),
        rows in 1usize..30,
        seed in 0u64..1000,
    ) {
        let specs: Vec<VariableSpec> = kinds
            .iter()
            .enumerate()
            .map(|(j, &k)| VariableSpec::new(format!("q{j}"), k, if j % 2 == 0 { "" } else { "block" }))
            .collect();
        let columns: Vec<Vec<f64>> = kinds
            .iter()
            .enumerate()
            .map(|(j, k)| {
                (0..rows)
                    .map(|i| {
                        let h = (i as u64 * 31 + j as u64 * 17 + seed) % 97;
                        match k {
                            VariableKind::Likert7 => (1 + h % 7) as f64,
                            _ => h as f64 / 7.0 - 3.3,
                        }
                    })
                    .collect()
            })
            .collect();
        let data = Dataset::from_columns(specs.clone(), columns);
        let schema = parse_schema(&render_schema(&specs)).unwrap();
        prop_assert_eq!(&schema, &specs);
        let again = apply_schema(&parse_table(&data.to_csv()).unwrap(), &schema).unwrap();
        for j in 0..data.p() {
            prop_assert_eq!(data.column(j), again.column(j));
        }
        prop_assert_eq!(again.names(), data.names());
    }
}

#[test]
fn files_load_like_strings() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("data.tsv");
    let schema = dir.path().join("schema.txt");
    std::fs::File::create(&table).unwrap().write_all(b"a\tb\tid\n1\t7\tx\n2\t6\ty\n").unwrap();
    std::fs::File::create(&schema)
        .unwrap()
        .write_all(b"# comment\na = likert7, attitudes\nb = likert7\nid = excluded\n")
        .unwrap();
    let data = apply_schema(&load_table(&table).unwrap(), &load_schema(&schema).unwrap()).unwrap();
    assert_eq!(data.names(), vec!["a", "b"]);
    assert_eq!(data.column(1), &[7.0, 6.0]);
}

#[test]
fn out_of_range_likert_is_rejected() {
    let t = parse_table("a\n1\n8\n").unwrap();
    let err = apply_schema(&t, &[VariableSpec::new("a", VariableKind::Likert7, "")]).unwrap_err();
    assert!(matches!(err, IngestError::LikertRange { .. }), "{err:?}");
}

#[test]
fn complete_cases_drops_sparse_columns_then_rows() {
    let mut text = String::from("a,b,c\n");
    for i in 0..20 {
        let b = if i < 15 { String::new() } else { "1".into() };
        let c = if i == 3 { String::new() } else { (i % 7 + 1).to_string() };
        text.push_str(&format!("{},{b},{c}\n", i % 5 + 1));
    }
    let specs = parse_schema("a = likert7\nb = likert7\nc = likert7\n").unwrap();
    let data = apply_schema(&parse_table(&text).unwrap(), &specs).unwrap();
    let clean = complete_cases(&data, 0.5).unwrap();
    assert_eq!(clean.names(), vec!["a", "c"]);
    assert_eq!(clean.n(), 19);
    assert!(!clean.has_missing());
    assert!(!clean.provenance().is_empty());
}

#[test]
fn standardized_columns_have_unit_ml_variance() {
    let data = standardize(&sample(&Scm::chain(4, 0.8), 777, 3)).unwrap();
    let ctx = ScoreContext::from_dataset(&data).unwrap();
    for j in 0..4 {
        assert!(ctx.stats().means()[j].abs() < 1e-12);
        assert!((ctx.stats().cov(j, j) - 1.0).abs() < 1e-12);
    }
}

/// Partial correlation of columns i and j given `z`, from residuals of raw
/// least-squares fits.
fn partial_correlation(data: &Dataset, i: usize, j: usize, z: &[usize]) -> f64 {
    let n = data.n();
    let residual = |t: usize| -> Vec<f64> {
        let k = z.len() + 1;
        let row = |r: usize| -> Vec<f64> { std::iter::once(1.0).chain(z.iter().map(|&c| data.value(r, c))).collect() };
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for r in 0..n {
            let x = row(r);
            for u in 0..k {
                b[u] += x[u] * data.value(r, t);
                for v in 0..k {
                    a[u][v] += x[u] * x[v];
                }
            }
        }
        let beta = gauss_solve(a, b);
        (0..n).map(|r| data.value(r, t) - row(r).iter().zip(&beta).map(|(x, w)| x * w).sum::<f64>()).collect()
    };
    pearson(&residual(i), &residual(j))
}

#[test]
fn d_separation_agrees_with_vanishing_partial_correlation() {
    let n = 20_000;
    for seed in 0..6u64 {
        let dag: Dag = random_dag(5, 2.0, seed);
        let data = sample(&Scm::with_random_weights(dag.clone(), 0.5, 1.0, seed), n, seed);
        let bound = 5.0 / (n as f64).sqrt();
        for i in 0..5 {
            for j in i + 1..5 {
                for mask in 0u32..32 {
                    if mask & (1 << i) != 0 || mask & (1 << j) != 0 {
                        continue;
                    }
                    let z: Vec<usize> = (0..5).filter(|&v| mask & (1 << v) != 0).collect();
                    let r = partial_correlation(&data, i, j, &z).abs();
                    if dag.d_separated(&[i], &[j], &z).unwrap() {
                        assert!(r < bound, "seed {seed} ({i},{j}|{z:?}) separated but r={r}");
                    }
                }
            }
        }
    }
}
