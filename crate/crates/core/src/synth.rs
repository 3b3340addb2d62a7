//! Linear-Gaussian ground truth: random DAGs, ancestral sampling, Likert
//! discretization and structure-recovery metrics.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::graph::{cpdag_from_dag, Dag, NodeId, Pdag};
use crate::ingest::{Dataset, VariableKind, VariableSpec};

/// Near-uniform symmetric bins on the standard-normal scale.
pub const DEFAULT_CUTPOINTS: [f64; 6] = [-1.5, -0.9, -0.3, 0.3, 0.9, 1.5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("weight given for non-edge {0} -> {1}")]
    WeightOnNonEdge(NodeId, NodeId),
    #[error("noise standard deviation for node {0} must be positive")]
    NonPositiveNoise(NodeId),
    #[error("expected {expected} noise terms, got {found}")]
    NoiseCount { expected: usize, found: usize },
    #[error("cutpoints must be 6 strictly ascending values")]
    BadCutpoints,
    #[error("graphs differ in size: {0} vs {1}")]
    SizeMismatch(usize, usize),
}

/// Linear structural causal model with Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    graph: Dag,
    weights: BTreeMap<(NodeId, NodeId), f64>,
    noise_std: Vec<f64>,
}

impl Scm {
    /// Edges of `graph` without an entry in `weights` get weight 0.
    pub fn new(graph: Dag, weights: BTreeMap<(NodeId, NodeId), f64>, noise_std: Vec<f64>) -> Result<Self, SynthError> {
        if let Some(&(u, v)) = weights.keys().find(|&&(u, v)| !graph.has_edge(u, v)) {
            return Err(SynthError::WeightOnNonEdge(u, v));
        }
        if noise_std.len() != graph.p() {
            return Err(SynthError::NoiseCount {
                expected: graph.p(),
                found: noise_std.len(),
            });
        }
        if let Some(v) = noise_std.iter().position(|&s| !(s > 0.0)) {
            return Err(SynthError::NonPositiveNoise(v));
        }
        Ok(Scm {
            graph,
            weights,
            noise_std,
        })
    }

    /// Unit noise and weights drawn uniformly from `±[low, high]`.
    pub fn with_random_weights(graph: Dag, low: f64, high: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = graph
            .edges()
            .into_iter()
            .map(|e| {
                let magnitude = rng.random_range(low..=high);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (e, sign * magnitude)
            })
            .collect();
        let p = graph.p();
        Scm::new(graph, weights, vec![1.0; p]).expect("weights on edges, unit noise")
    }

    /// `X1 -> X2 -> ... -> Xp` with a common weight and unit noise.
    pub fn chain(p: usize, weight: f64) -> Self {
        let edges: Vec<_> = (1..p).map(|v| (v - 1, v)).collect();
        let graph = Dag::from_edges(p, &edges).expect("chain is acyclic");
        let weights = edges.iter().map(|&e| (e, weight)).collect();
        Scm::new(graph, weights, vec![1.0; p]).expect("valid chain")
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> f64 {
        self.weights.get(&(u, v)).copied().unwrap_or(0.0)
    }

    pub fn noise_std(&self, v: NodeId) -> f64 {
        self.noise_std[v]
    }
}

/// Random DAG: a uniformly shuffled causal order, then each forward pair
/// joined independently with probability `expected_degree / (p - 1)`.
pub fn random_dag(p: usize, expected_degree: f64, seed: u64) -> Dag {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<NodeId> = (0..p).collect();
    order.shuffle(&mut rng);
    let prob = if p > 1 {
        (expected_degree / (p - 1) as f64).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if rng.random_bool(prob) {
                edges.push((order[i], order[j]));
            }
        }
    }
    Dag::from_edges(p, &edges).expect("edges follow a total order")
}

/// Default names `X1..Xp`.
pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("X{i}")).collect()
}

/// Ancestral sampling: each node is the weighted sum of its parents plus
/// Gaussian noise. Columns are numeric and named `X1..Xp`.
pub fn sample(scm: &Scm, n: usize, seed: u64) -> Dataset {
    let p = scm.graph.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = vec![vec![0.0; n]; p];
    for v in scm.graph.topological_order() {
        let parents: Vec<(NodeId, f64)> = scm.graph.parents(v).iter().map(|&u| (u, scm.weight(u, v))).collect();
        let noise = scm.noise_std[v];
        let mut col = vec![0.0; n];
        for (i, slot) in col.iter_mut().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            *slot = parents.iter().map(|&(u, w)| w * columns[u][i]).sum::<f64>() + noise * e;
        }
        columns[v] = col;
    }
    let specs = default_names(p)
        .into_iter()
        .map(|name| VariableSpec::new(name, VariableKind::Numeric, "synthetic"))
        .collect();
    Dataset::from_columns(specs, columns)
}

/// Maps each value to `1 + number of cutpoints <= value`, giving a 1..7
/// response. Every column becomes Likert-7.
pub fn likertize(data: &Dataset, cutpoints: &[f64]) -> Result<Dataset, SynthError> {
    if cutpoints.len() != 6 || cutpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SynthError::BadCutpoints);
    }
    let out = data.map_values(|_, v| (cutpoints.partition_point(|&c| c <= v) + 1) as f64);
    let specs = data
        .specs()
        .iter()
        .map(|s| VariableSpec::new(s.name.clone(), VariableKind::Likert7, s.category.clone()))
        .collect();
    Ok(out.with_specs(specs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryMetrics {
    pub shd: usize,
    pub skeleton_precision: f64,
    pub skeleton_recall: f64,
    pub orientation_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    None,
    Forward,
    Backward,
    Undirected,
}

fn mark(g: &Pdag, u: NodeId, v: NodeId) -> Mark {
    if g.has_directed(u, v) {
        Mark::Forward
    } else if g.has_directed(v, u) {
        Mark::Backward
    } else if g.has_undirected(u, v) {
        Mark::Undirected
    } else {
        Mark::None
    }
}

/// Structural Hamming distance: node pairs whose edge mark differs (missing,
/// extra, reversed, or directed vs undirected each count once).
pub fn shd(a: &Pdag, b: &Pdag) -> Result<usize, SynthError> {
    if a.p() != b.p() {
        return Err(SynthError::SizeMismatch(a.p(), b.p()));
    }
    let p = a.p();
    Ok((0..p)
        .flat_map(|u| (u + 1..p).map(move |v| (u, v)))
        .filter(|&(u, v)| mark(a, u, v) != mark(b, u, v))
        .count())
}

/// Compares the CPDAG of `truth` against `estimate`. Ratios with an empty
/// denominator are reported as 1.
pub fn recovery_metrics(truth: &Dag, estimate: &Pdag) -> Result<RecoveryMetrics, SynthError> {
    let reference = cpdag_from_dag(truth);
    let shd = shd(&reference, estimate)?;
    let p = truth.p();
    let (mut both, mut est_adj, mut true_adj) = (0usize, 0usize, 0usize);
    let (mut directed_both, mut agree) = (0usize, 0usize);
    for u in 0..p {
        for v in u + 1..p {
            let (t, e) = (mark(&reference, u, v), mark(estimate, u, v));
            let (ta, ea) = (t != Mark::None, e != Mark::None);
            true_adj += usize::from(ta);
            est_adj += usize::from(ea);
            both += usize::from(ta && ea);
            let directed = |m: Mark| matches!(m, Mark::Forward | Mark::Backward);
            if directed(t) && directed(e) {
                directed_both += 1;
                agree += usize::from(t == e);
            }
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    Ok(RecoveryMetrics {
        shd,
        skeleton_precision: ratio(both, est_adj),
        skeleton_recall: ratio(both, true_adj),
        orientation_accuracy: ratio(agree, directed_both),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_dag_degenerate_cases() {
        assert_eq!(random_dag(1, 3.0, 7).n_edges(), 0);
        assert_eq!(random_dag(10, 0.0, 7).n_edges(), 0);
        assert_eq!(random_dag(10, 2.0, 7), random_dag(10, 2.0, 7));
    }

    #[test]
    fn random_dag_mean_degree() {
        let seeds = 1000;
        let total: usize = (0..seeds).map(|s| random_dag(50, 2.0, s).n_edges()).sum();
        let mean_degree = 2.0 * total as f64 / (50.0 * seeds as f64);
        assert!((1.8..=2.2).contains(&mean_degree), "mean degree {mean_degree}");
    }

    #[test]
    fn sample_is_seed_deterministic() {
        let scm = Scm::chain(3, 1.0);
        assert_eq!(sample(&scm, 100, 9), sample(&scm, 100, 9));
        assert_ne!(sample(&scm, 100, 9), sample(&scm, 100, 10));
    }

    #[test]
    fn chain_variance_adds_up() {
        let scm = Scm::chain(4, 1.0);
        let d = sample(&scm, 20000, 3);
        for k in 0..4 {
            let col = d.column(k);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            let expected = (k + 1) as f64;
            assert!((var - expected).abs() < 0.08 * expected, "node {k}: {var}");
        }
    }

    #[test]
    fn scm_validation() {
        let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let bad = BTreeMap::from([((1, 0), 0.5)]);
        assert_eq!(Scm::new(g.clone(), bad, vec![1.0, 1.0]), Err(SynthError::WeightOnNonEdge(1, 0)));
        assert_eq!(Scm::new(g.clone(), BTreeMap::new(), vec![1.0, 0.0]), Err(SynthError::NonPositiveNoise(1)));
        let scm = Scm::with_random_weights(g, 0.5, 1.0, 4);
        let w = scm.weight(0, 1).abs();
        assert!((0.5..=1.0).contains(&w));
    }

    #[test]
    fn likert_boundaries_and_mode() {
        let specs = vec![VariableSpec::new("z", VariableKind::Numeric, "")];
        let d = Dataset::from_columns(specs, vec![vec![-3.0, -1.5, 0.0, 1.5, 9.0]]);
        let l = likertize(&d, &DEFAULT_CUTPOINTS).unwrap();
        assert_eq!(l.column(0), &[1.0, 2.0, 4.0, 7.0, 7.0]);
        assert_eq!(l.specs()[0].kind, VariableKind::Likert7);
        assert!(likertize(&d, &[0.0, 1.0, 1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(likertize(&d, &[0.0, 1.0]).is_err());

        let normal = sample(&Scm::chain(1, 0.0), 5000, 11);
        let l = likertize(&normal, &DEFAULT_CUTPOINTS).unwrap();
        let mut counts = [0usize; 8];
        for &v in l.column(0) {
            counts[v as usize] += 1;
        }
        let mode = (1..=7).max_by_key(|&k| counts[k]).unwrap();
        assert_eq!(mode, 4);
    }

    #[test]
    fn metrics_examples() {
        let truth = Dag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let m = recovery_metrics(&truth, &cpdag_from_dag(&truth)).unwrap();
        assert_eq!(m.shd, 0);
        assert_eq!((m.skeleton_precision, m.skeleton_recall, m.orientation_accuracy), (1.0, 1.0, 1.0));

        let m = recovery_metrics(&truth, &Pdag::new(3)).unwrap();
        assert_eq!(m.shd, 2);
        assert_eq!(m.skeleton_recall, 0.0);

        let flipped = Pdag::from_edges(3, &[(2, 0), (1, 2)], &[]).unwrap();
        let m = recovery_metrics(&truth, &flipped).unwrap();
        assert_eq!(m.shd, 1);
        assert_eq!(m.orientation_accuracy, 0.5);

        assert!(recovery_metrics(&truth, &Pdag::new(4)).is_err());
    }
}
