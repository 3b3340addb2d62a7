use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use causal_survey::baselines::{correlation_screen, CorrelationMethod};
use causal_survey::effects::{rank_interventions, EffectConfig};
use causal_survey::ges::{run_ges, GesOptions};
use causal_survey::ingest::standardize;
use causal_survey::par::Parallelism;
use causal_survey::synth::{likertize, random_dag, sample, Scm, DEFAULT_CUTPOINTS};

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn ges(c: &mut Criterion) {
    let mut group = c.benchmark_group("ges");
    group.sample_size(10);
    for p in [10usize, 20] {
        let scm = Scm::with_random_weights(random_dag(p, 2.0, 1), 0.5, 1.0, 1);
        let data = standardize(&sample(&scm, 2000, 1)).unwrap();
        for (label, mode) in MODES {
            let opts = GesOptions {
                parallelism: mode,
                verify: false,
                ..GesOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(label, p), &data, |b, d| b.iter(|| run_ges(d, &opts).unwrap()));
        }
    }
    group.finish();
}

fn effects(c: &mut Criterion) {
    let mut group = c.benchmark_group("rank_interventions");
    group.sample_size(10);
    let p = 12;
    let scm = Scm::with_random_weights(random_dag(p, 2.0, 2), 0.5, 1.0, 2);
    let raw = sample(&scm, 2000, 2);
    let z = standardize(&raw).unwrap();
    let data = likertize(&z, &DEFAULT_CUTPOINTS).unwrap();
    let graph = run_ges(&z, &GesOptions::default()).unwrap().graph;
    for (label, mode) in MODES {
        let cfg = EffectConfig {
            resamples: 200,
            parallelism: mode,
            ..EffectConfig::default()
        };
        group.bench_function(label, |b| b.iter(|| rank_interventions(&data, &graph, &cfg).unwrap()));
    }
    group.finish();
}

fn correlation(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlation_screen");
    let scm = Scm::with_random_weights(random_dag(60, 2.0, 3), 0.5, 1.0, 3);
    let data = sample(&scm, 1000, 3);
    for (label, mode) in MODES {
        group.bench_function(label, |b| {
            b.iter(|| correlation_screen(&data, CorrelationMethod::Spearman, 0.5, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ges, effects, correlation);
criterion_main!(benches);
