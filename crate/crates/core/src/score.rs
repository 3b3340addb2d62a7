//! Decomposable Gaussian BIC computed from sufficient statistics.
//!
//! The local score of a node given a parent set is
//! `n ln(rss / n) + c (|parents| + 2) ln n`, where `rss / n` is the
//! maximum-likelihood residual variance of the linear regression of the
//! node on its parents and `c` is the penalty multiplier (1 for plain BIC).
//! Lower is better.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::RwLock;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{Dag, NodeId};
use crate::ingest::Dataset;

/// Ridge added to a singular parent covariance block.
pub const RIDGE: f64 = 1e-8;
/// Relative floor on the residual variance so perfectly determined nodes
/// still get a finite score.
const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("node {0} cannot be its own parent")]
    SelfParent(NodeId),
    #[error("node {node} out of range for {p} variables")]
    NodeOutOfRange { node: NodeId, p: usize },
    #[error("graph has {graph} nodes but statistics cover {stats} variables")]
    SizeMismatch { graph: usize, stats: usize },
    #[error("cannot compute statistics: dataset has missing values")]
    MissingValues,
    #[error("cannot compute statistics from an empty dataset")]
    Empty,
}

/// Means and maximum-likelihood covariance (divide by n).
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    n: usize,
    p: usize,
    means: Vec<f64>,
    covariance: Vec<f64>,
}

impl SufficientStats {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.p + j]
    }

    /// Fewer samples than parameters of a saturated model; scores of large
    /// parent sets may be degenerate.
    pub fn underdetermined(&self) -> bool {
        self.n < self.p + 1
    }
}

pub fn compute_stats(data: &Dataset) -> Result<SufficientStats, ScoreError> {
    if data.has_missing() {
        return Err(ScoreError::MissingValues);
    }
    let (n, p) = (data.n(), data.p());
    if n == 0 {
        return Err(ScoreError::Empty);
    }
    let nf = n as f64;
    let means: Vec<f64> = (0..p).map(|j| data.column(j).iter().sum::<f64>() / nf).collect();
    let centered: Vec<Vec<f64>> = (0..p)
        .map(|j| data.column(j).iter().map(|v| v - means[j]).collect())
        .collect();
    let mut covariance = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let c = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>() / nf;
            covariance[i * p + j] = c;
            covariance[j * p + i] = c;
        }
    }
    let stats = SufficientStats { n, p, means, covariance };
    if stats.underdetermined() {
        log::warn!("n = {n} < p + 1 = {}: BIC scores may be degenerate", p + 1);
    }
    Ok(stats)
}

type MemoKey = (NodeId, Vec<NodeId>);

/// Sufficient statistics plus a memo table of local scores. Lookups may run
/// concurrently; insertions are serialized by the lock.
#[derive(Debug)]
pub struct ScoreContext {
    stats: SufficientStats,
    penalty_multiplier: f64,
    memo: RwLock<HashMap<MemoKey, f64>>,
    degenerate: AtomicBool,
}

impl ScoreContext {
    pub fn new(stats: SufficientStats) -> Self {
        Self::with_penalty(stats, 1.0)
    }

    pub fn with_penalty(stats: SufficientStats, penalty_multiplier: f64) -> Self {
        ScoreContext {
            stats,
            penalty_multiplier,
            memo: RwLock::new(HashMap::new()),
            degenerate: AtomicBool::new(false),
        }
    }

    pub fn from_dataset(data: &Dataset) -> Result<Self, ScoreError> {
        Ok(Self::new(compute_stats(data)?))
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn penalty_multiplier(&self) -> f64 {
        self.penalty_multiplier
    }

    /// Set once any score needed the ridge or the residual floor.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate.load(Ordering::Relaxed)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.read().expect("memo lock").len()
    }

    fn key(&self, node: NodeId, parents: &[NodeId]) -> Result<MemoKey, ScoreError> {
        let p = self.stats.p;
        for &v in std::iter::once(&node).chain(parents) {
            if v >= p {
                return Err(ScoreError::NodeOutOfRange { node: v, p });
            }
        }
        if parents.contains(&node) {
            return Err(ScoreError::SelfParent(node));
        }
        let mut sorted = parents.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        Ok((node, sorted))
    }

    pub fn local_bic(&self, node: NodeId, parents: &[NodeId]) -> Result<f64, ScoreError> {
        let key = self.key(node, parents)?;
        if let Some(&v) = self.memo.read().expect("memo lock").get(&key) {
            return Ok(v);
        }
        let value = self.compute(key.0, &key.1);
        self.memo.write().expect("memo lock").insert(key, value);
        Ok(value)
    }

    /// Local score computed without consulting or filling the memo.
    pub fn fresh_local_bic(&self, node: NodeId, parents: &[NodeId]) -> Result<f64, ScoreError> {
        let (node, parents) = self.key(node, parents)?;
        Ok(self.compute(node, &parents))
    }

    fn compute(&self, node: NodeId, parents: &[NodeId]) -> f64 {
        let n = self.stats.n as f64;
        let var_y = self.stats.cov(node, node);
        let explained = if parents.is_empty() {
            0.0
        } else {
            let k = parents.len();
            let sxx = DMatrix::from_fn(k, k, |i, j| self.stats.cov(parents[i], parents[j]));
            let sxy = DVector::from_fn(k, |i, _| self.stats.cov(parents[i], node));
            let (beta, singular) = solve_spd(sxx, &sxy);
            if singular {
                self.degenerate.store(true, Ordering::Relaxed);
            }
            sxy.dot(&beta)
        };
        let floor = RESIDUAL_FLOOR * var_y.max(f64::MIN_POSITIVE);
        let mut residual = var_y - explained;
        if residual < floor {
            self.degenerate.store(true, Ordering::Relaxed);
            residual = floor;
        }
        let params = (parents.len() + 2) as f64;
        n * residual.ln() + self.penalty_multiplier * params * n.ln()
    }

    pub fn global_bic(&self, dag: &Dag) -> Result<f64, ScoreError> {
        if dag.p() != self.stats.p {
            return Err(ScoreError::SizeMismatch {
                graph: dag.p(),
                stats: self.stats.p,
            });
        }
        (0..dag.p()).map(|v| self.local_bic(v, dag.parents(v))).sum()
    }

    /// `local_bic(new) - local_bic(old)`; negative is an improvement.
    pub fn delta_score(&self, node: NodeId, old_parents: &[NodeId], new_parents: &[NodeId]) -> Result<f64, ScoreError> {
        let old = self.key(node, old_parents)?;
        let new = self.key(node, new_parents)?;
        if old == new {
            return Ok(0.0);
        }
        Ok(self.local_bic(node, &new.1)? - self.local_bic(node, &old.1)?)
    }

    /// Memo contents as `node|parents|value` lines, sorted by key.
    pub fn trace_lines(&self, names: &[String]) -> Vec<String> {
        let memo = self.memo.read().expect("memo lock");
        let mut entries: Vec<_> = memo.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        entries
            .into_iter()
            .map(|((node, parents), value)| {
                let ps: Vec<&str> = parents.iter().map(|&q| names[q].as_str()).collect();
                format!("{}|{}|{value:.9}", names[*node], ps.join(","))
            })
            .collect()
    }
}

/// Solves `a x = b` for symmetric positive semi-definite `a`. A factor
/// with a pivot below `1e-12` of the largest diagonal counts as singular and
/// the ridged system is solved instead.
fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let k = a.nrows();
    let scale = (0..k).map(|i| a[(i, i)]).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    if let Some(chol) = a.clone().cholesky() {
        let l = chol.l_dirty();
        if (0..k).all(|i| l[(i, i)] * l[(i, i)] > 1e-12 * scale) {
            return (chol.solve(b), false);
        }
    }
    let ridged = a + DMatrix::identity(k, k) * RIDGE;
    let x = match ridged.clone().cholesky() {
        Some(chol) => chol.solve(b),
        None => ridged.lu().solve(b).unwrap_or_else(|| DVector::zeros(k)),
    };
    (x, true)
}
