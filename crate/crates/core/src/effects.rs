//! Reading a learned graph for intervention targets.
//!
//! [`partition_variables`] separates connected variables from isolated ones,
//! [`hierarchy`] orders the connected ones from causes to effects, and
//! [`estimate_intervention`] contrasts respondents who rate a target high
//! against those who rate it low, across every other variable, using
//! balanced subsamples drawn repeatedly from each group.

use rand::{seq::index, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{consistent_extension, GraphError, NodeId, Pdag};
use crate::ingest::{Dataset, VariableKind};
use crate::par::{self, Parallelism};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectError {
    #[error("target {0} is out of range")]
    TargetOutOfRange(NodeId),
    #[error("target {0:?} is not a Likert-7 variable")]
    NotLikert(String),
    #[error("dataset has missing values")]
    MissingValues,
    #[error("thresholds must differ (high {high}, low {low})")]
    InvalidThresholds { high: f64, low: f64 },
    #[error("degenerate split on {target:?}: {group} group empty")]
    DegenerateSplit { target: String, group: &'static str },
    #[error("target {0:?} has zero variance")]
    ZeroVariance(String),
    #[error("resample count must be at least 1")]
    NoResamples,
    #[error("graph has {graph} nodes but dataset has {data} variables")]
    SizeMismatch { graph: usize, data: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Partition {
    pub associated: Vec<NodeId>,
    pub independent: Vec<NodeId>,
}

/// Associated variables have at least one edge; the rest are independent.
pub fn partition_variables(g: &Pdag) -> Partition {
    let (associated, independent) = (0..g.p()).partition(|&v| g.degree(v) > 0);
    Partition {
        associated,
        independent,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Hierarchy {
    /// Longest directed path from any root of the consistent extension.
    pub depth: Vec<usize>,
    /// `|descendants| - |ancestors|` in the consistent extension.
    pub ancestry_score: Vec<i64>,
    /// Highest ancestry score among connected nodes (lowest index on ties).
    pub most_ancestor: Option<NodeId>,
    /// Lowest ancestry score among connected nodes (lowest index on ties).
    pub most_descendant: Option<NodeId>,
    /// The graph had undirected edges, so metrics depend on the chosen
    /// extension.
    pub ambiguous: bool,
}

pub fn hierarchy(g: &Pdag) -> Result<Hierarchy, GraphError> {
    let dag = consistent_extension(g)?;
    let p = dag.p();
    let mut depth = vec![0usize; p];
    for v in dag.topological_order() {
        depth[v] = dag.parents(v).iter().map(|&u| depth[u] + 1).max().unwrap_or(0);
    }
    let ancestry_score: Vec<i64> = (0..p)
        .map(|v| {
            let d = dag.descendants(v).expect("in range").len() as i64;
            let a = dag.ancestors(v).expect("in range").len() as i64;
            d - a
        })
        .collect();
    let connected: Vec<NodeId> = (0..p).filter(|&v| g.degree(v) > 0).collect();
    // max_by_key/min_by_key return the last/first extreme; fold keeps the lowest index.
    let pick = |better: fn(i64, i64) -> bool| {
        connected.iter().copied().fold(None, |best: Option<NodeId>, v| match best {
            Some(b) if !better(ancestry_score[v], ancestry_score[b]) => Some(b),
            _ => Some(v),
        })
    };
    Ok(Hierarchy {
        depth,
        most_ancestor: pick(|a, b| a > b),
        most_descendant: pick(|a, b| a < b),
        ancestry_score,
        ambiguous: !g.undirected_edges().is_empty(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectConfig {
    /// Responses at or above this value form the high group.
    pub high_threshold: f64,
    /// Responses at or below this value form the low group.
    pub low_threshold: f64,
    pub resamples: usize,
    /// Per-group draw size cap; `None` draws the smaller group's size.
    pub subsample: Option<usize>,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for EffectConfig {
    fn default() -> Self {
        EffectConfig {
            high_threshold: 5.0,
            low_threshold: 3.0,
            resamples: 1000,
            subsample: None,
            seed: 0,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EffectReport {
    pub target: NodeId,
    /// Mean response of the high group minus the low group, per variable,
    /// in the dataset's own units.
    pub per_variable_effect: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Mean absolute effect over all variables except the target.
    pub mean_abs_effect: f64,
    pub n_high: usize,
    pub n_low: usize,
    pub subsample_size: usize,
    pub resamples: usize,
}

fn group_mean(col: &[f64], rows: impl Iterator<Item = usize>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in rows {
        sum += col[i];
        count += 1;
    }
    sum / count as f64
}

/// Linear-interpolated lower quantile of ascending `sorted`.
fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let frac = h - i as f64;
    match sorted.get(i + 1) {
        Some(&next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

/// 2.5% / 97.5% bounds computed so that negating the sample exactly negates
/// and swaps the bounds.
fn percentile_interval(mut values: Vec<f64>) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let lo = lower_quantile(&values, 0.025);
    let negated: Vec<f64> = values.iter().rev().map(|v| -v).collect();
    let hi = -lower_quantile(&negated, 0.025);
    (lo, hi)
}

/// Estimates the effect of raising `target` by contrasting its high and low
/// response groups. With `high_threshold < low_threshold` the roles of the
/// two sides swap and every effect changes sign exactly.
pub fn estimate_intervention(data: &Dataset, target: NodeId, cfg: &EffectConfig) -> Result<EffectReport, EffectError> {
    if target >= data.p() {
        return Err(EffectError::TargetOutOfRange(target));
    }
    let name = data.specs()[target].name.clone();
    if data.specs()[target].kind != VariableKind::Likert7 {
        return Err(EffectError::NotLikert(name));
    }
    if data.has_missing() {
        return Err(EffectError::MissingValues);
    }
    if cfg.high_threshold == cfg.low_threshold || cfg.high_threshold.is_nan() || cfg.low_threshold.is_nan() {
        return Err(EffectError::InvalidThresholds {
            high: cfg.high_threshold,
            low: cfg.low_threshold,
        });
    }
    if cfg.resamples == 0 {
        return Err(EffectError::NoResamples);
    }

    let swapped = cfg.high_threshold < cfg.low_threshold;
    let (top, bottom) = if swapped {
        (cfg.low_threshold, cfg.high_threshold)
    } else {
        (cfg.high_threshold, cfg.low_threshold)
    };
    let col = data.column(target);
    let upper: Vec<usize> = (0..data.n()).filter(|&i| col[i] >= top).collect();
    let lower: Vec<usize> = (0..data.n()).filter(|&i| col[i] <= bottom).collect();
    let (high_rows, low_rows) = if swapped { (&lower, &upper) } else { (&upper, &lower) };
    let empty = match (high_rows.is_empty(), low_rows.is_empty()) {
        (true, true) => Some("high and low"),
        (true, false) => Some("high"),
        (false, true) => Some("low"),
        (false, false) => None,
    };
    if let Some(group) = empty {
        return Err(EffectError::DegenerateSplit { target: name, group });
    }
    if col.iter().all(|&v| v == col[0]) {
        return Err(EffectError::ZeroVariance(name));
    }

    let sign = if swapped { -1.0 } else { 1.0 };
    let p = data.p();
    let point: Vec<f64> = (0..p)
        .map(|j| {
            let c = data.column(j);
            sign * (group_mean(c, upper.iter().copied()) - group_mean(c, lower.iter().copied()))
        })
        .collect();

    let m = upper.len().min(lower.len()).min(cfg.subsample.unwrap_or(usize::MAX)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(target as u64));
    let mut draws = vec![Vec::with_capacity(cfg.resamples); p];
    for _ in 0..cfg.resamples {
        let up: Vec<usize> = index::sample(&mut rng, upper.len(), m).into_iter().map(|k| upper[k]).collect();
        let down: Vec<usize> = index::sample(&mut rng, lower.len(), m).into_iter().map(|k| lower[k]).collect();
        for (j, dist) in draws.iter_mut().enumerate() {
            let c = data.column(j);
            dist.push(sign * (group_mean(c, up.iter().copied()) - group_mean(c, down.iter().copied())));
        }
    }

    let mut ci_low = Vec::with_capacity(p);
    let mut ci_high = Vec::with_capacity(p);
    for (j, dist) in draws.into_iter().enumerate() {
        let (lo, hi) = percentile_interval(dist);
        ci_low.push(lo.min(point[j]));
        ci_high.push(hi.max(point[j]));
    }
    let others = (0..p).filter(|&j| j != target);
    let mean_abs_effect = if p > 1 {
        others.map(|j| point[j].abs()).sum::<f64>() / (p - 1) as f64
    } else {
        0.0
    };

    Ok(EffectReport {
        target,
        per_variable_effect: point,
        ci_low,
        ci_high,
        mean_abs_effect,
        n_high: high_rows.len(),
        n_low: low_rows.len(),
        subsample_size: m,
        resamples: cfg.resamples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEffect {
    pub target: NodeId,
    pub outcome: Result<EffectReport, EffectError>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    /// Successful estimates by descending mean absolute effect (ties by
    /// index), then failed targets by index.
    pub entries: Vec<RankedEffect>,
    pub warnings: Vec<String>,
}

impl Ranking {
    pub fn successes(&self) -> impl Iterator<Item = &EffectReport> {
        self.entries.iter().filter_map(|e| e.outcome.as_ref().ok())
    }
}

/// Estimates every associated Likert-7 variable as a target and ranks them.
/// Failures are kept per entry rather than aborting the ranking.
pub fn rank_interventions(data: &Dataset, g: &Pdag, cfg: &EffectConfig) -> Result<Ranking, EffectError> {
    if g.p() != data.p() {
        return Err(EffectError::SizeMismatch {
            graph: g.p(),
            data: data.p(),
        });
    }
    let targets: Vec<NodeId> = partition_variables(g)
        .associated
        .into_iter()
        .filter(|&v| data.specs()[v].kind == VariableKind::Likert7)
        .collect();
    let mut ranking = Ranking::default();
    if targets.is_empty() {
        ranking
            .warnings
            .push("no associated Likert-7 variables: nothing to rank".to_string());
        return Ok(ranking);
    }
    let outcomes = par::map(cfg.parallelism, &targets, |&t| estimate_intervention(data, t, cfg));
    let mut entries: Vec<RankedEffect> = targets
        .into_iter()
        .zip(outcomes)
        .map(|(target, outcome)| RankedEffect { target, outcome })
        .collect();
    for e in &entries {
        if let Err(err) = &e.outcome {
            let msg = format!("skipped target {}: {err}", data.specs()[e.target].name);
            log::warn!("{msg}");
            ranking.warnings.push(msg);
        }
    }
    entries.sort_by(|a, b| match (&a.outcome, &b.outcome) {
        (Ok(x), Ok(y)) => y
            .mean_abs_effect
            .total_cmp(&x.mean_abs_effect)
            .then(a.target.cmp(&b.target)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.target.cmp(&b.target),
    });
    ranking.entries = entries;
    Ok(ranking)
}
