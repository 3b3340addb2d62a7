//! DAGs, partially directed graphs and the equivalence-class machinery used
//! by the search: d-separation, CPDAG completion, Meek orientation rules and
//! consistent extension.
//!
//! All iteration is in ascending node order so every output is
//! deterministic.

use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::fmt::Write as _;

use thiserror::Error;

/// Dense variable index, matching dataset column order.
pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {node} out of range for graph with {p} nodes")]
    NodeOutOfRange { node: NodeId, p: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge set contains a directed cycle")]
    Cycle,
    #[error("nodes {0} and {1} are already adjacent")]
    AlreadyAdjacent(NodeId, NodeId),
    #[error("nodes {0} and {1} are not joined by an undirected edge")]
    NotUndirected(NodeId, NodeId),
    #[error("query sets overlap")]
    OverlappingSets,
    #[error("orientation rules hit an inconsistency: {0}")]
    Inconsistent(String),
    #[error("graph admits no consistent DAG extension")]
    NoConsistentExtension,
    #[error("expected {expected} node names, found {found}")]
    NameCount { expected: usize, found: usize },
}

fn check_node(node: NodeId, p: usize) -> Result<(), GraphError> {
    if node < p {
        Ok(())
    } else {
        Err(GraphError::NodeOutOfRange { node, p })
    }
}

/// True iff the directed edge list admits a topological order.
pub fn is_acyclic(p: usize, edges: &[(NodeId, NodeId)]) -> bool {
    let mut indegree = vec![0usize; p];
    let mut children = vec![Vec::new(); p];
    for &(u, v) in edges {
        if u == v {
            return false;
        }
        children[u].push(v);
        indegree[v] += 1;
    }
    let mut queue: Vec<NodeId> = (0..p).filter(|&v| indegree[v] == 0).collect();
    let mut visited = 0;
    while let Some(u) = queue.pop() {
        visited += 1;
        for &v in &children[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                queue.push(v);
            }
        }
    }
    visited == p
}

/// Directed acyclic graph stored as sorted parent lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    parents: Vec<Vec<NodeId>>,
}

impl Dag {
    pub fn empty(p: usize) -> Self {
        Dag {
            parents: vec![Vec::new(); p],
        }
    }

    pub fn from_edges(p: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut parents = vec![Vec::new(); p];
        for &(u, v) in edges {
            check_node(u, p)?;
            check_node(v, p)?;
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            parents[v].push(u);
        }
        for ps in &mut parents {
            ps.sort_unstable();
            ps.dedup();
        }
        if !is_acyclic(p, edges) {
            return Err(GraphError::Cycle);
        }
        Ok(Dag { parents })
    }

    pub fn p(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, v: NodeId) -> &[NodeId] {
        &self.parents[v]
    }

    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        (0..self.p()).filter(|&c| self.has_edge(v, c)).collect()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.parents[v].binary_search(&u).is_ok()
    }

    pub fn is_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.has_edge(u, v) || self.has_edge(v, u)
    }

    /// Edges sorted by (tail, head).
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out: Vec<_> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(v, ps)| ps.iter().map(move |&u| (u, v)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn n_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Topological order; among available nodes the lowest index goes first.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let p = self.p();
        let children: Vec<Vec<NodeId>> = (0..p).map(|v| self.children(v)).collect();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut heap: BinaryHeap<Reverse<NodeId>> = (0..p).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(Reverse(u)) = heap.pop() {
            order.push(u);
            for &c in &children[u] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    heap.push(Reverse(c));
                }
            }
        }
        order
    }

    fn closure(&self, start: NodeId, up: bool) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            let next = if up { self.parents[v].clone() } else { self.children(v) };
            for w in next {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Proper ancestors of `x` (excluding `x`).
    pub fn ancestors(&self, x: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        check_node(x, self.p())?;
        Ok(self.closure(x, true))
    }

    /// Proper descendants of `x` (excluding `x`).
    pub fn descendants(&self, x: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        check_node(x, self.p())?;
        Ok(self.closure(x, false))
    }

    /// Decides whether `z` d-separates `x` from `y`, using reachability of
    /// active trails ("Bayes ball") in O(p + edges).
    pub fn d_separated(&self, x: &[NodeId], y: &[NodeId], z: &[NodeId]) -> Result<bool, GraphError> {
        let p = self.p();
        for &v in x.iter().chain(y).chain(z) {
            check_node(v, p)?;
        }
        let mut in_x = vec![false; p];
        let mut in_y = vec![false; p];
        let mut in_z = vec![false; p];
        for &v in x {
            in_x[v] = true;
        }
        for &v in y {
            if in_x[v] {
                return Err(GraphError::OverlappingSets);
            }
            in_y[v] = true;
        }
        for &v in z {
            if in_x[v] || in_y[v] {
                return Err(GraphError::OverlappingSets);
            }
            in_z[v] = true;
        }

        // Nodes that are in z or have a descendant in z: colliders here are open.
        let mut opens_collider = in_z.clone();
        let mut stack: Vec<NodeId> = z.to_vec();
        while let Some(v) = stack.pop() {
            for &u in &self.parents[v] {
                if !opens_collider[u] {
                    opens_collider[u] = true;
                    stack.push(u);
                }
            }
        }

        let children: Vec<Vec<NodeId>> = (0..p).map(|v| self.children(v)).collect();
        // visited[v][0]: reached travelling up (from a child); [1]: down (from a parent)
        let mut visited = vec![[false; 2]; p];
        let mut queue: VecDeque<(NodeId, bool)> = x.iter().map(|&v| (v, true)).collect();
        while let Some((v, up)) = queue.pop_front() {
            let slot = usize::from(!up);
            if visited[v][slot] {
                continue;
            }
            visited[v][slot] = true;
            if in_y[v] {
                return Ok(false);
            }
            if up {
                if !in_z[v] {
                    queue.extend(self.parents[v].iter().map(|&u| (u, true)));
                    queue.extend(children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !in_z[v] {
                    queue.extend(children[v].iter().map(|&c| (c, false)));
                }
                if opens_collider[v] {
                    queue.extend(self.parents[v].iter().map(|&u| (u, true)));
                }
            }
        }
        Ok(true)
    }

    /// Unshielded colliders `(a, m, b)` with `a < b`, `a -> m <- b` and
    /// `a`, `b` nonadjacent.
    pub fn v_structures(&self) -> BTreeSet<(NodeId, NodeId, NodeId)> {
        let mut out = BTreeSet::new();
        for m in 0..self.p() {
            let ps = &self.parents[m];
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    if !self.is_adjacent(a, b) {
                        out.insert((a, m, b));
                    }
                }
            }
        }
        out
    }
}

/// Partially directed graph. Each adjacency is either directed or
/// undirected, never both.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pdag {
    parents: Vec<BTreeSet<NodeId>>,
    children: Vec<BTreeSet<NodeId>>,
    neighbors: Vec<BTreeSet<NodeId>>,
}

impl Pdag {
    pub fn new(p: usize) -> Self {
        Pdag {
            parents: vec![BTreeSet::new(); p],
            children: vec![BTreeSet::new(); p],
            neighbors: vec![BTreeSet::new(); p],
        }
    }

    /// Fully directed copy of a DAG.
    pub fn from_dag(dag: &Dag) -> Self {
        let mut g = Pdag::new(dag.p());
        for (u, v) in dag.edges() {
            g.parents[v].insert(u);
            g.children[u].insert(v);
        }
        g
    }

    pub fn from_edges(
        p: usize,
        directed: &[(NodeId, NodeId)],
        undirected: &[(NodeId, NodeId)],
    ) -> Result<Self, GraphError> {
        let mut g = Pdag::new(p);
        for &(u, v) in directed {
            g.add_directed(u, v)?;
        }
        for &(u, v) in undirected {
            g.add_undirected(u, v)?;
        }
        Ok(g)
    }

    pub fn p(&self) -> usize {
        self.parents.len()
    }

    fn check_new_pair(&self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        check_node(u, self.p())?;
        check_node(v, self.p())?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if self.is_adjacent(u, v) {
            return Err(GraphError::AlreadyAdjacent(u, v));
        }
        Ok(())
    }

    pub fn add_directed(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        self.check_new_pair(u, v)?;
        self.children[u].insert(v);
        self.parents[v].insert(u);
        Ok(())
    }

    pub fn add_undirected(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        self.check_new_pair(u, v)?;
        self.neighbors[u].insert(v);
        self.neighbors[v].insert(u);
        Ok(())
    }

    /// Removes whatever edge joins `u` and `v`; no-op if nonadjacent.
    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) {
        self.children[u].remove(&v);
        self.parents[v].remove(&u);
        self.children[v].remove(&u);
        self.parents[u].remove(&v);
        self.neighbors[u].remove(&v);
        self.neighbors[v].remove(&u);
    }

    /// Turns the undirected edge `u - v` into `u -> v`.
    pub fn orient(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        if !self.has_undirected(u, v) {
            return Err(GraphError::NotUndirected(u, v));
        }
        self.neighbors[u].remove(&v);
        self.neighbors[v].remove(&u);
        self.children[u].insert(v);
        self.parents[v].insert(u);
        Ok(())
    }

    pub fn has_directed(&self, u: NodeId, v: NodeId) -> bool {
        self.children[u].contains(&v)
    }

    pub fn has_undirected(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors[u].contains(&v)
    }

    pub fn is_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.has_directed(u, v) || self.has_directed(v, u) || self.has_undirected(u, v)
    }

    /// Directed parents of `v`.
    pub fn parents(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.parents[v]
    }

    pub fn children(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.children[v]
    }

    /// Nodes joined to `v` by an undirected edge.
    pub fn neighbors(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.neighbors[v]
    }

    /// Every node adjacent to `v` regardless of edge type.
    pub fn adjacents(&self, v: NodeId) -> BTreeSet<NodeId> {
        self.parents[v]
            .iter()
            .chain(&self.children[v])
            .chain(&self.neighbors[v])
            .copied()
            .collect()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.parents[v].len() + self.children[v].len() + self.neighbors[v].len()
    }

    pub fn directed_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(u, cs)| cs.iter().map(move |&v| (u, v)))
            .collect()
    }

    /// Undirected edges as `(u, v)` with `u < v`.
    pub fn undirected_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect()
    }

    pub fn n_edges(&self) -> usize {
        self.directed_edges().len() + self.undirected_edges().len()
    }

    /// True iff every member of `nodes` is adjacent to every other.
    pub fn is_clique(&self, nodes: &[NodeId]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(i, &a)| nodes[i + 1..].iter().all(|&b| self.is_adjacent(a, b)))
    }

    /// True iff `to` is reachable from `from` along directed edges.
    fn directed_path(&self, from: NodeId, to: NodeId) -> bool {
        let mut seen = vec![false; self.p()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            for &c in &self.children[v] {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// True iff some path from `from` to `to` uses only undirected edges and
    /// edges pointing forward, and avoids every node flagged in `blocked`.
    pub fn semi_directed_path(&self, from: NodeId, to: NodeId, blocked: &[bool]) -> bool {
        let mut seen = vec![false; self.p()];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for &w in self.children[v].iter().chain(&self.neighbors[v]) {
                if w == to {
                    return true;
                }
                if !seen[w] && !blocked[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    /// Converts to a DAG if there are no undirected edges.
    pub fn to_dag(&self) -> Option<Dag> {
        if self.neighbors.iter().any(|n| !n.is_empty()) {
            return None;
        }
        Dag::from_edges(self.p(), &self.directed_edges()).ok()
    }

    /// Re-canonicalizes an edited graph into the CPDAG of its equivalence
    /// class.
    pub fn completed(&self) -> Result<Pdag, GraphError> {
        Ok(cpdag_from_dag(&consistent_extension(self)?))
    }
}

/// Completed PDAG of the Markov equivalence class of `dag`: edges in
/// v-structures are directed, then orientations are propagated.
pub fn cpdag_from_dag(dag: &Dag) -> Pdag {
    let mut pattern = Pdag::new(dag.p());
    let vs = dag.v_structures();
    let compelled: BTreeSet<(NodeId, NodeId)> = vs.iter().flat_map(|&(a, m, b)| [(a, m), (b, m)]).collect();
    for (u, v) in dag.edges() {
        if compelled.contains(&(u, v)) {
            pattern.add_directed(u, v).expect("fresh pair");
        } else {
            pattern.add_undirected(u, v).expect("fresh pair");
        }
    }
    meek_close(&pattern).expect("pattern of a DAG is always consistent")
}

/// Returns why `a -> b` is forced, if any of the four Meek rules applies to
/// the undirected edge `a - b`.
fn forced_orientation(g: &Pdag, a: NodeId, b: NodeId) -> Option<u8> {
    // R1: c -> a - b with c, b nonadjacent
    if g.parents(a).iter().any(|&c| !g.is_adjacent(c, b)) {
        return Some(1);
    }
    // R2: a -> c -> b
    if g.children(a).iter().any(|c| g.parents(b).contains(c)) {
        return Some(2);
    }
    // R3: a - c -> b, a - d -> b, c and d nonadjacent
    let cands: Vec<NodeId> = g
        .neighbors(a)
        .iter()
        .copied()
        .filter(|&c| c != b && g.parents(b).contains(&c))
        .collect();
    for (i, &c) in cands.iter().enumerate() {
        if cands[i + 1..].iter().any(|&d| !g.is_adjacent(c, d)) {
            return Some(3);
        }
    }
    // R4: c -> d -> b with a adjacent to c and d, c and b nonadjacent
    for &d in g.parents(b) {
        if !g.is_adjacent(a, d) {
            continue;
        }
        if g.parents(d).iter().any(|&c| c != a && g.is_adjacent(a, c) && !g.is_adjacent(c, b)) {
            return Some(4);
        }
    }
    None
}

/// Applies the four Meek orientation rules until nothing changes.
pub fn meek_close(input: &Pdag) -> Result<Pdag, GraphError> {
    let mut g = input.clone();
    loop {
        let mut changed = false;
        for (u, v) in g.undirected_edges() {
            if !g.has_undirected(u, v) {
                continue;
            }
            let (a, b, rule) = match (forced_orientation(&g, u, v), forced_orientation(&g, v, u)) {
                (Some(r), None) => (u, v, r),
                (None, Some(r)) => (v, u, r),
                (None, None) => continue,
                (Some(_), Some(_)) => {
                    return Err(GraphError::Inconsistent(format!("edge {u} - {v} forced both ways")))
                }
            };
            if g.directed_path(b, a) {
                return Err(GraphError::Inconsistent(format!(
                    "rule {rule} orienting {a} -> {b} closes a directed cycle"
                )));
            }
            if let Some(&w) = g.parents(b).iter().find(|&&w| !g.is_adjacent(w, a)) {
                return Err(GraphError::Inconsistent(format!(
                    "rule {rule} orienting {a} -> {b} creates v-structure with {w}"
                )));
            }
            g.orient(a, b).expect("edge is undirected");
            changed = true;
        }
        if !changed {
            return Ok(g);
        }
    }
}

/// Orients every undirected edge without creating cycles or new
/// v-structures (Dor-Tarsi elimination). The highest-index eligible sink is
/// removed first, so ties resolve toward edges pointing from lower to
/// higher index.
pub fn consistent_extension(input: &Pdag) -> Result<Dag, GraphError> {
    let p = input.p();
    let mut g = input.clone();
    let mut edges = input.directed_edges();
    let mut alive: BTreeSet<NodeId> = (0..p).collect();
    while !alive.is_empty() {
        let sink = alive.iter().rev().copied().find(|&x| {
            if !g.children(x).is_empty() {
                return false;
            }
            let adj = g.adjacents(x);
            g.neighbors(x)
                .iter()
                .all(|&y| adj.iter().all(|&w| w == y || g.is_adjacent(w, y)))
        });
        let x = sink.ok_or(GraphError::NoConsistentExtension)?;
        edges.extend(g.neighbors(x).iter().map(|&y| (y, x)));
        for w in g.adjacents(x) {
            g.remove_edge(x, w);
        }
        alive.remove(&x);
    }
    Dag::from_edges(p, &edges)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

/// Renders a Graphviz digraph. Undirected edges carry `dir=none`.
pub fn to_dot(g: &Pdag, names: &[String]) -> Result<String, GraphError> {
    if names.len() != g.p() {
        return Err(GraphError::NameCount {
            expected: g.p(),
            found: names.len(),
        });
    }
    let mut out = String::from("digraph cpdag {\n  node [shape=box];\n");
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{}\"];", dot_escape(name));
    }
    for (u, v) in g.directed_edges() {
        let _ = writeln!(out, "  n{u} -> n{v};");
    }
    for (u, v) in g.undirected_edges() {
        let _ = writeln!(out, "  n{u} -> n{v} [dir=none];");
    }
    out.push_str("}\n");
    Ok(out)
}

/// Serializable graph: node names plus directed and undirected edge lists.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GraphDump {
    pub nodes: Vec<String>,
    pub directed: Vec<(NodeId, NodeId)>,
    pub undirected: Vec<(NodeId, NodeId)>,
}

impl GraphDump {
    pub fn new(g: &Pdag, names: &[String]) -> Result<Self, GraphError> {
        if names.len() != g.p() {
            return Err(GraphError::NameCount {
                expected: g.p(),
                found: names.len(),
            });
        }
        Ok(GraphDump {
            nodes: names.to_vec(),
            directed: g.directed_edges(),
            undirected: g.undirected_edges(),
        })
    }

    pub fn to_pdag(&self) -> Result<Pdag, GraphError> {
        Pdag::from_edges(self.nodes.len(), &self.directed, &self.undirected)
    }
}
