//! Independent oracles for the test suites. Nothing here calls the search,
//! d-separation, CPDAG or statistics code under test; it only reads graph
//! edges and raw data columns.

use std::collections::BTreeSet;

use causal_survey::graph::{Dag, NodeId};
use causal_survey::ingest::Dataset;
use causal_survey::synth::Scm;

/// Every DAG on `p` labelled nodes (p <= 5 is practical: 29281 DAGs).
pub fn all_dags(p: usize) -> Vec<Dag> {
    let pairs: Vec<(NodeId, NodeId)> = (0..p).flat_map(|u| (u + 1..p).map(move |v| (u, v))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(u, v) in &pairs {
            match c % 3 {
                1 => edges.push((u, v)),
                2 => edges.push((v, u)),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(d) = Dag::from_edges(p, &edges) {
            out.push(d);
        }
    }
    out
}

/// Skeleton as sorted pairs and unshielded colliders, computed directly.
pub fn class_signature(dag: &Dag) -> (Vec<(NodeId, NodeId)>, Vec<(NodeId, NodeId, NodeId)>) {
    let p = dag.p();
    let adj = |u: NodeId, v: NodeId| dag.has_edge(u, v) || dag.has_edge(v, u);
    let mut skeleton = Vec::new();
    for u in 0..p {
        for v in u + 1..p {
            if adj(u, v) {
                skeleton.push((u, v));
            }
        }
    }
    let mut colliders = Vec::new();
    for m in 0..p {
        for a in 0..p {
            for b in a + 1..p {
                if dag.has_edge(a, m) && dag.has_edge(b, m) && !adj(a, b) {
                    colliders.push((a, m, b));
                }
            }
        }
    }
    (skeleton, colliders)
}

fn descendants_inclusive(dag: &Dag, x: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::from([x]);
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        for c in 0..dag.p() {
            if dag.has_edge(v, c) && seen.insert(c) {
                stack.push(c);
            }
        }
    }
    seen
}

/// d-separation by enumerating every simple path in the skeleton and
/// checking each interior node against the chain/fork/collider rules.
pub fn d_separated_by_paths(dag: &Dag, x: &[NodeId], y: &[NodeId], z: &[NodeId]) -> bool {
    let p = dag.p();
    let z: BTreeSet<NodeId> = z.iter().copied().collect();
    let desc: Vec<BTreeSet<NodeId>> = (0..p).map(|v| descendants_inclusive(dag, v)).collect();
    let adj = |u: NodeId, v: NodeId| dag.has_edge(u, v) || dag.has_edge(v, u);

    let blocked = |path: &[NodeId]| {
        path.windows(3).any(|w| {
            let (a, m, b) = (w[0], w[1], w[2]);
            let collider = dag.has_edge(a, m) && dag.has_edge(b, m);
            if collider {
                desc[m].is_disjoint(&z)
            } else {
                z.contains(&m)
            }
        })
    };

    fn walk(
        path: &mut Vec<NodeId>,
        target: NodeId,
        p: usize,
        adj: &dyn Fn(NodeId, NodeId) -> bool,
        found_open: &mut dyn FnMut(&[NodeId]) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if last == target {
            return found_open(path);
        }
        for next in 0..p {
            if adj(last, next) && !path.contains(&next) {
                path.push(next);
                let open = walk(path, target, p, adj, found_open);
                path.pop();
                if open {
                    return true;
                }
            }
        }
        false
    }

    for &s in x {
        for &t in y {
            let mut path = vec![s];
            let mut is_open = |path: &[NodeId]| !blocked(path);
            if walk(&mut path, t, p, &adj, &mut is_open) {
                return false;
            }
        }
    }
    true
}

/// Solves a small dense system by Gaussian elimination with partial
/// pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Residual variance (RSS / n) of the OLS fit of column `y` on `xs` plus an
/// intercept, computed from raw rows.
pub fn ols_residual_variance(data: &Dataset, y: NodeId, xs: &[NodeId]) -> f64 {
    let n = data.n();
    let k = xs.len() + 1;
    let row = |i: usize| -> Vec<f64> {
        std::iter::once(1.0).chain(xs.iter().map(|&j| data.value(i, j))).collect()
    };
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        let r = row(i);
        for a in 0..k {
            xty[a] += r[a] * data.value(i, y);
            for b in 0..k {
                xtx[a][b] += r[a] * r[b];
            }
        }
    }
    let beta = gauss_solve(xtx, xty);
    (0..n)
        .map(|i| {
            let fit: f64 = row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
            (data.value(i, y) - fit).powi(2)
        })
        .sum::<f64>()
        / n as f64
}

/// Gaussian BIC of a node given parents, via the OLS oracle.
pub fn ols_local_bic(data: &Dataset, y: NodeId, xs: &[NodeId]) -> f64 {
    let n = data.n() as f64;
    n * ols_residual_variance(data, y, xs).ln() + (xs.len() + 2) as f64 * n.ln()
}

/// Implied covariance `(I - B)^-1 D (I - B)^-T` of a linear SCM, built by
/// propagating covariances in topological order.
pub fn analytic_covariance(scm: &Scm) -> Vec<Vec<f64>> {
    let g = scm.graph();
    let p = g.p();
    let mut order = Vec::new();
    let mut placed = vec![false; p];
    while order.len() < p {
        for v in 0..p {
            if !placed[v] && g.parents(v).iter().all(|&u| placed[u]) {
                placed[v] = true;
                order.push(v);
            }
        }
    }
    let mut s = vec![vec![0.0; p]; p];
    for (idx, &v) in order.iter().enumerate() {
        // cov(v, w) for earlier w
        for &w in &order[..idx] {
            let c: f64 = g.parents(v).iter().map(|&u| scm.weight(u, v) * s[u][w]).sum();
            s[v][w] = c;
            s[w][v] = c;
        }
        let ps = g.parents(v);
        let mut var = scm.noise_std(v).powi(2);
        for &a in ps {
            for &b in ps {
                var += scm.weight(a, v) * scm.weight(b, v) * s[a][b];
            }
        }
        s[v][v] = var;
    }
    s
}

/// Textbook two-pass Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Average ranks by counting: rank = #less + (#equal + 1) / 2.
pub fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&naive_ranks(a), &naive_ranks(b))
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Two-sided Student-t tail probability by quadrature. With
/// `x = sqrt(df) tan(theta)` the density integrates `cos^(df-1)(theta)`.
pub fn t_two_sided_p_quadrature(t: f64, df: f64) -> f64 {
    let g = |th: f64| th.cos().powf(df - 1.0);
    let upper = (t.abs() / df.sqrt()).atan();
    let half = std::f64::consts::FRAC_PI_2;
    let total = simpson(g, 0.0, half, 200_000);
    let inner = simpson(g, 0.0, upper, 200_000);
    (1.0 - inner / total).max(0.0)
}

/// Reference values from an external statistics package:
/// `(n, mean, t statistic, two-sided p)` for the column
/// `1 + (5i + i^2 + i div 3) mod 7`, `i = 0..n`, tested against 4.
pub const T_TEST_REFERENCE: [(usize, f64, f64, f64); 3] = [
    (5, 3.4, -0.5144957554275267, 0.6340271611962769),
    (30, 3.6, -1.0544292703932208, 0.30039256880584514),
    (300, 3.66, -2.8581800072261876, 0.004560044387452108),
];

/// Two-sided tail reference values `(t, df, p)` from the same package.
pub const T_TAIL_REFERENCE: [(f64, f64, f64); 5] = [
    (2.1, 4.0, 0.10365328631760218),
    (0.3, 29.0, 0.7663170933289678),
    (-3.5, 299.0, 0.0005360986137731025),
    (1.0, 1.0, 0.49999999999999956),
    (12.0, 10.0, 2.92140882476998e-07),
];

pub fn t_test_column(n: usize) -> Vec<f64> {
    (0..n).map(|i| (1 + (i * 5 + i * i + i / 3) % 7) as f64).collect()
}
