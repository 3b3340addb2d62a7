//! Greedy Equivalence Search over CPDAGs.
//!
//! The forward phase repeatedly applies the best valid `Insert(x, y, T)`
//! operator, the backward phase the best valid `Delete(x, y, H)` operator,
//! each until no operator improves the BIC by more than `epsilon`. Operator
//! validity and score deltas follow the standard equivalence-class
//! characterization:
//!
//! * `Insert(x, y, T)`: `x`, `y` nonadjacent, `T` a subset of the undirected
//!   neighbors of `y` not adjacent to `x`. Valid iff `NA(y, x) ∪ T` is a
//!   clique and every semi-directed path from `y` to `x` passes through it.
//! * `Delete(x, y, H)`: `x -> y` or `x - y`, `H` a subset of `NA(y, x)`.
//!   Valid iff `NA(y, x) \ H` is a clique.
//!
//! where `NA(y, x)` is the set of undirected neighbors of `y` adjacent to
//! `x`. Only the local score of `y` changes.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{GraphError, NodeId, Pdag};
use crate::ingest::Dataset;
use crate::par::{self, Parallelism};
use crate::score::{ScoreContext, ScoreError};

#[derive(Debug, Error)]
pub enum GesError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("search needs complete data")]
    MissingValues,
    #[error("search needs standardized data")]
    NotStandardized,
    #[error("search needs at least 2 variables, got {0}")]
    TooFewVariables(usize),
    #[error("move is not valid in the current state: {0}")]
    InvalidMove(String),
    #[error("incremental score {incremental} drifted from re-scored {rescored}")]
    ScoreDrift { incremental: f64, rescored: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Forward,
    Backward,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Forward => "forward",
            Phase::Backward => "backward",
            Phase::Done => "done",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Insert,
    Delete,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Insert => "insert",
            MoveKind::Delete => "delete",
        }
    }
}

/// A scored operator. `subset` is `T` for inserts and `H` for deletes,
/// kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub x: NodeId,
    pub y: NodeId,
    pub subset: Vec<NodeId>,
    pub delta: f64,
}

impl Move {
    /// Tie-break key: lowest `(x, y, |subset|, subset)` wins.
    fn order_key(&self) -> (NodeId, NodeId, usize, &[NodeId]) {
        (self.x, self.y, self.subset.len(), &self.subset)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub graph: Pdag,
    pub score: f64,
    pub iteration: usize,
    pub phase: Phase,
}

impl SearchState {
    /// Edgeless graph scored under `ctx`.
    pub fn empty(ctx: &ScoreContext) -> Result<Self, GesError> {
        let p = ctx.stats().p();
        let score = (0..p).map(|v| ctx.local_bic(v, &[])).sum::<Result<f64, _>>()?;
        Ok(SearchState {
            graph: Pdag::new(p),
            score,
            iteration: 0,
            phase: Phase::Forward,
        })
    }

    /// Global BIC of the state's consistent extension, computed from scratch.
    pub fn rescore(&self, ctx: &ScoreContext) -> Result<f64, GesError> {
        let dag = crate::graph::consistent_extension(&self.graph)?;
        Ok(ctx.global_bic(&dag)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GesOptions {
    /// Minimum improvement for a move to be applied.
    pub epsilon: f64,
    /// Applied-move cap; `None` means `10 p^2`.
    pub max_iterations: Option<usize>,
    /// Largest neighbor set whose subsets are enumerated exhaustively.
    pub subset_cap: usize,
    pub penalty_multiplier: f64,
    pub parallelism: Parallelism,
    /// Re-score every applied move from scratch and fail on drift.
    pub verify: bool,
}

impl Default for GesOptions {
    fn default() -> Self {
        GesOptions {
            epsilon: 1e-9,
            max_iterations: None,
            subset_cap: 12,
            penalty_multiplier: 1.0,
            parallelism: Parallelism::default(),
            verify: cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub phase: Phase,
    pub kind: MoveKind,
    pub x: NodeId,
    pub y: NodeId,
    pub subset: Vec<NodeId>,
    pub delta: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchTrace {
    pub initial_score: f64,
    pub entries: Vec<TraceEntry>,
    /// Operator evaluations where the neighbor set exceeded the subset cap.
    pub cap_hits: usize,
}

impl SearchTrace {
    /// One line per applied move:
    /// `phase|move kind|x name|y name|subset names|delta|cumulative score`.
    pub fn render(&self, names: &[String]) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let subset: Vec<&str> = e.subset.iter().map(|&v| names[v].as_str()).collect();
            let _ = writeln!(
                out,
                "{}|{}|{}|{}|{}|{:.9}|{:.9}",
                e.phase.as_str(),
                e.kind.as_str(),
                names[e.x],
                names[e.y],
                subset.join(","),
                e.delta,
                e.cumulative
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GesResult {
    pub graph: Pdag,
    pub score: f64,
    pub trace: SearchTrace,
    pub truncated: bool,
    /// At least one local score needed regularization.
    pub degenerate: bool,
}

fn sorted_union(parts: &[&[NodeId]]) -> Vec<NodeId> {
    let set: BTreeSet<NodeId> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    set.into_iter().collect()
}

/// All subsets of `items` in `(size, lexicographic)` order.
fn power_set(items: &[NodeId]) -> Vec<Vec<NodeId>> {
    let mut out: Vec<Vec<NodeId>> = (0u64..1 << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Either every subset of `pool` (small pools) or a greedy chain of
/// singleton additions, each step taking the valid extension with the best
/// score (large pools).
fn candidate_subsets(
    pool: &[NodeId],
    cap: usize,
    cap_hit: &mut bool,
    mut score_of: impl FnMut(&[NodeId]) -> Result<Option<f64>, GesError>,
) -> Result<Vec<(Vec<NodeId>, f64)>, GesError> {
    let mut out = Vec::new();
    if pool.len() <= cap {
        for subset in power_set(pool) {
            if let Some(delta) = score_of(&subset)? {
                out.push((subset, delta));
            }
        }
        return Ok(out);
    }
    *cap_hit = true;
    let mut current: Vec<NodeId> = Vec::new();
    if let Some(delta) = score_of(&current)? {
        out.push((current.clone(), delta));
    }
    loop {
        let mut best: Option<(Vec<NodeId>, f64)> = None;
        for &v in pool.iter().filter(|v| !current.contains(v)) {
            let mut cand = current.clone();
            cand.push(v);
            cand.sort_unstable();
            if let Some(delta) = score_of(&cand)? {
                if best.as_ref().is_none_or(|(_, d)| delta < *d) {
                    best = Some((cand, delta));
                }
            }
        }
        match best {
            Some((cand, delta)) => {
                current = cand.clone();
                out.push((cand, delta));
            }
            None => break,
        }
    }
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

fn insert_valid(g: &Pdag, x: NodeId, y: NodeId, na: &[NodeId], t: &[NodeId]) -> bool {
    let s = sorted_union(&[na, t]);
    if !g.is_clique(&s) {
        return false;
    }
    let mut blocked = vec![false; g.p()];
    for &v in &s {
        blocked[v] = true;
    }
    !g.semi_directed_path(y, x, &blocked)
}

/// Undirected neighbors of `y` adjacent to `x`, and those not adjacent.
fn split_neighbors(g: &Pdag, x: NodeId, y: NodeId) -> (Vec<NodeId>, Vec<NodeId>) {
    g.neighbors(y)
        .iter()
        .copied()
        .filter(|&v| v != x)
        .partition(|&v| g.is_adjacent(v, x))
}

fn insertions_for_pair(
    g: &Pdag,
    ctx: &ScoreContext,
    x: NodeId,
    y: NodeId,
    cap: usize,
) -> Result<(Vec<Move>, bool), GesError> {
    let (na, t0) = split_neighbors(g, x, y);
    let pa: Vec<NodeId> = g.parents(y).iter().copied().collect();
    let mut cap_hit = false;
    let scored = candidate_subsets(&t0, cap, &mut cap_hit, |t| {
        if !insert_valid(g, x, y, &na, t) {
            return Ok(None);
        }
        let base = sorted_union(&[&na, t, &pa]);
        let with_x = sorted_union(&[&base, &[x]]);
        Ok(Some(ctx.delta_score(y, &base, &with_x)?))
    })?;
    let moves = scored
        .into_iter()
        .map(|(subset, delta)| Move {
            kind: MoveKind::Insert,
            x,
            y,
            subset,
            delta,
        })
        .collect();
    Ok((moves, cap_hit))
}

fn deletions_for_pair(
    g: &Pdag,
    ctx: &ScoreContext,
    x: NodeId,
    y: NodeId,
    cap: usize,
) -> Result<(Vec<Move>, bool), GesError> {
    let (na, _) = split_neighbors(g, x, y);
    let pa: Vec<NodeId> = g.parents(y).iter().copied().filter(|&v| v != x).collect();
    let mut cap_hit = false;
    let scored = candidate_subsets(&na, cap, &mut cap_hit, |h| {
        let rest: Vec<NodeId> = na.iter().copied().filter(|v| !h.contains(v)).collect();
        if !g.is_clique(&rest) {
            return Ok(None);
        }
        let base = sorted_union(&[&rest, &pa]);
        let with_x = sorted_union(&[&base, &[x]]);
        Ok(Some(ctx.delta_score(y, &with_x, &base)?))
    })?;
    let moves = scored
        .into_iter()
        .map(|(subset, delta)| Move {
            kind: MoveKind::Delete,
            x,
            y,
            subset,
            delta,
        })
        .collect();
    Ok((moves, cap_hit))
}

fn collect_moves(
    pairs: Vec<(NodeId, NodeId)>,
    mode: Parallelism,
    f: impl Fn(NodeId, NodeId) -> Result<(Vec<Move>, bool), GesError> + Sync + Send,
) -> Result<(Vec<Move>, usize), GesError> {
    let results = par::map(mode, &pairs, |&(x, y)| f(x, y));
    let mut moves = Vec::new();
    let mut cap_hits = 0;
    for r in results {
        let (ms, hit) = r?;
        cap_hits += usize::from(hit);
        moves.extend(ms);
    }
    Ok((moves, cap_hits))
}

/// Every valid insertion from `state`, ordered by `(x, y, |T|, T)`.
pub fn enumerate_insertions(
    state: &SearchState,
    ctx: &ScoreContext,
    options: &GesOptions,
) -> Result<Vec<Move>, GesError> {
    Ok(enumerate_insertions_counted(state, ctx, options)?.0)
}

fn enumerate_insertions_counted(
    state: &SearchState,
    ctx: &ScoreContext,
    options: &GesOptions,
) -> Result<(Vec<Move>, usize), GesError> {
    let g = &state.graph;
    let p = g.p();
    let pairs: Vec<(NodeId, NodeId)> = (0..p)
        .flat_map(|x| (0..p).map(move |y| (x, y)))
        .filter(|&(x, y)| x != y && !g.is_adjacent(x, y))
        .collect();
    collect_moves(pairs, options.parallelism, |x, y| {
        insertions_for_pair(g, ctx, x, y, options.subset_cap)
    })
}

/// Every valid deletion from `state`, ordered by `(x, y, |H|, H)`.
pub fn enumerate_deletions(
    state: &SearchState,
    ctx: &ScoreContext,
    options: &GesOptions,
) -> Result<Vec<Move>, GesError> {
    Ok(enumerate_deletions_counted(state, ctx, options)?.0)
}

fn enumerate_deletions_counted(
    state: &SearchState,
    ctx: &ScoreContext,
    options: &GesOptions,
) -> Result<(Vec<Move>, usize), GesError> {
    let g = &state.graph;
    let p = g.p();
    let pairs: Vec<(NodeId, NodeId)> = (0..p)
        .flat_map(|x| (0..p).map(move |y| (x, y)))
        .filter(|&(x, y)| g.has_directed(x, y) || g.has_undirected(x, y))
        .collect();
    collect_moves(pairs, options.parallelism, |x, y| {
        deletions_for_pair(g, ctx, x, y, options.subset_cap)
    })
}

/// Applies `m` and re-completes the graph. The new score is the old score
/// plus `m.delta`; with `options.verify` it is also recomputed from scratch.
pub fn apply_move(
    state: &SearchState,
    m: &Move,
    ctx: &ScoreContext,
    options: &GesOptions,
) -> Result<SearchState, GesError> {
    let g = &state.graph;
    let (x, y) = (m.x, m.y);
    let p = g.p();
    if x >= p || y >= p || x == y {
        return Err(GesError::InvalidMove(format!("bad endpoints ({x}, {y})")));
    }
    let (na, t0) = split_neighbors(g, x, y);
    let mut edited = g.clone();
    match m.kind {
        MoveKind::Insert => {
            if g.is_adjacent(x, y) {
                return Err(GesError::InvalidMove(format!("{x} and {y} already adjacent")));
            }
            if !m.subset.iter().all(|t| t0.contains(t)) || !insert_valid(g, x, y, &na, &m.subset) {
                return Err(GesError::InvalidMove(format!("insert {x} -> {y} with T = {:?}", m.subset)));
            }
            edited.add_directed(x, y)?;
            for &t in &m.subset {
                edited.orient(t, y)?;
            }
        }
        MoveKind::Delete => {
            if !(g.has_directed(x, y) || g.has_undirected(x, y)) {
                return Err(GesError::InvalidMove(format!("no edge {x} -> {y} or {x} - {y}")));
            }
            let rest: Vec<NodeId> = na.iter().copied().filter(|v| !m.subset.contains(v)).collect();
            if !m.subset.iter().all(|h| na.contains(h)) || !g.is_clique(&rest) {
                return Err(GesError::InvalidMove(format!("delete {x} -> {y} with H = {:?}", m.subset)));
            }
            edited.remove_edge(x, y);
            for &h in &m.subset {
                edited.orient(y, h)?;
                if edited.has_undirected(x, h) {
                    edited.orient(x, h)?;
                }
            }
        }
    }
    let next = SearchState {
        graph: edited.completed()?,
        score: state.score + m.delta,
        iteration: state.iteration + 1,
        phase: state.phase,
    };
    if options.verify {
        let rescored = next.rescore(ctx)?;
        if (rescored - next.score).abs() > 1e-6 * rescored.abs().max(1.0) {
            return Err(GesError::ScoreDrift {
                incremental: next.score,
                rescored,
            });
        }
    }
    Ok(next)
}

/// First move with the strictly smallest delta; enumeration order makes
/// this the lowest `(x, y, |subset|, subset)` among ties.
fn best_move(moves: Vec<Move>) -> Option<Move> {
    let mut best: Option<Move> = None;
    for m in moves {
        let better = match &best {
            None => true,
            Some(b) => m.delta < b.delta || (m.delta == b.delta && m.order_key() < b.order_key()),
        };
        if better {
            best = Some(m);
        }
    }
    best
}

fn check_data(data: &Dataset) -> Result<(), GesError> {
    if data.has_missing() {
        return Err(GesError::MissingValues);
    }
    if !data.is_standardized() {
        return Err(GesError::NotStandardized);
    }
    if data.p() < 2 {
        return Err(GesError::TooFewVariables(data.p()));
    }
    Ok(())
}

pub fn run_ges(data: &Dataset, options: &GesOptions) -> Result<GesResult, GesError> {
    check_data(data)?;
    let stats = crate::score::compute_stats(data)?;
    let ctx = ScoreContext::with_penalty(stats, options.penalty_multiplier);
    run_ges_with_context(&ctx, options)
}

/// Runs both phases from the empty graph using an existing score context.
pub fn run_ges_with_context(ctx: &ScoreContext, options: &GesOptions) -> Result<GesResult, GesError> {
    let p = ctx.stats().p();
    if p < 2 {
        return Err(GesError::TooFewVariables(p));
    }
    let cap = options.max_iterations.unwrap_or(10 * p * p);
    let mut state = SearchState::empty(ctx)?;
    let mut trace = SearchTrace {
        initial_score: state.score,
        ..SearchTrace::default()
    };
    let mut truncated = false;

    for phase in [Phase::Forward, Phase::Backward] {
        state.phase = phase;
        loop {
            if state.iteration >= cap {
                truncated = true;
                log::warn!("search stopped at the iteration cap ({cap})");
                break;
            }
            let (moves, hits) = match phase {
                Phase::Forward => enumerate_insertions_counted(&state, ctx, options)?,
                _ => enumerate_deletions_counted(&state, ctx, options)?,
            };
            trace.cap_hits += hits;
            let Some(m) = best_move(moves) else { break };
            if m.delta >= -options.epsilon {
                break;
            }
            state = apply_move(&state, &m, ctx, options)?;
            trace.entries.push(TraceEntry {
                phase,
                kind: m.kind,
                x: m.x,
                y: m.y,
                subset: m.subset,
                delta: m.delta,
                cumulative: state.score,
            });
        }
        if truncated {
            break;
        }
    }
    if trace.cap_hits > 0 {
        log::info!(
            "{} operator evaluations used greedy subset growth (neighbor sets above {})",
            trace.cap_hits,
            options.subset_cap
        );
    }
    state.phase = Phase::Done;
    Ok(GesResult {
        graph: state.graph,
        score: state.score,
        trace,
        truncated,
        degenerate: ctx.is_degenerate(),
    })
}
