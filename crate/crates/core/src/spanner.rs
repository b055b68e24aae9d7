//! Greedy t-spanners, stretch measurement and balanced edge ownership.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::game::{dijkstra_into, Network, StrategyProfile};
use crate::geometry::DistMatrix;
use crate::par::{self, Exec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpannerParams {
    pub t: f64,
    /// Target per-agent ownership cap; `None` balances to the optimum.
    pub k_cap: Option<usize>,
}

impl SpannerParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 1.0) {
            return input(format!("spanner stretch must exceed 1, got {t}"));
        }
        Ok(Self { t, k_cap: None })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpannerResult {
    /// Undirected edges `(u, v)` with `u < v`, in insertion order.
    pub edges: Vec<(usize, usize)>,
    /// `owners[i]` is the endpoint of `edges[i]` that pays for it.
    pub owners: Vec<usize>,
    /// Maximum degree inside the spanner.
    pub k_meas: usize,
    /// Measured stretch over all pairs of the spanned subset.
    pub t_meas: f64,
    /// Maximum number of edges owned by a single agent.
    pub k_own: usize,
}

impl SpannerResult {
    pub fn owned_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .zip(&self.owners)
            .map(|(&(u, v), &o)| if o == u { (u, v) } else { (v, u) })
    }

    /// The spanner as a strategy profile over all `n` agents.
    pub fn to_profile(&self, n: usize) -> StrategyProfile {
        StrategyProfile::from_owned_edges(n, self.owned_edges())
    }
}

/// Path-greedy t-spanner on `subset`: pairs are scanned by nondecreasing
/// weight (ties by index pair) and an edge is added iff the current spanner
/// distance exceeds `t` times the weight.
///
/// Spanner distances are tracked as an upper-bound matrix that is refreshed by
/// a Dijkstra run only when the bound cannot certify a pair, so most pairs are
/// settled without a search.
pub fn greedy_spanner(weights: &DistMatrix, subset: &[usize], t: f64) -> Result<SpannerResult> {
    greedy_spanner_with(weights, subset, SpannerParams::new(t)?, Exec::default())
}

pub fn greedy_spanner_with(
    weights: &DistMatrix,
    subset: &[usize],
    params: SpannerParams,
    exec: Exec,
) -> Result<SpannerResult> {
    if subset.is_empty() {
        return input("spanner needs at least one point");
    }
    let t = params.t;
    let mut nodes = subset.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.iter().any(|&v| v >= weights.n()) {
        return input("spanner subset index out of range");
    }
    let m = nodes.len();

    let mut pairs: Vec<(f64, u32, u32)> = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            pairs.push((weights.get(nodes[i], nodes[j]), i as u32, j as u32));
        }
    }
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut bound = vec![f64::INFINITY; m * m];
    for i in 0..m {
        bound[i * m + i] = 0.0;
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut local_edges = Vec::new();
    let mut dist = vec![0.0; m];
    for &(w, i, j) in &pairs {
        let (i, j) = (i as usize, j as usize);
        let limit = t * w;
        if bound[i * m + j] <= limit {
            continue;
        }
        dijkstra_into(&adj, i, &mut dist, |_, _| true);
        for (k, &d) in dist.iter().enumerate() {
            if d < bound[i * m + k] {
                bound[i * m + k] = d;
                bound[k * m + i] = d;
            }
        }
        if dist[j] <= limit {
            continue;
        }
        adj[i].push((j, w));
        adj[j].push((i, w));
        bound[i * m + j] = w;
        bound[j * m + i] = w;
        local_edges.push((i, j));
    }

    let edges: Vec<(usize, usize)> = local_edges
        .iter()
        .map(|&(i, j)| (nodes[i], nodes[j]))
        .collect();
    let ownership = distribute_ownership(weights.n(), &edges, params.k_cap);
    let mut degree = vec![0usize; weights.n()];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    let list: Vec<(usize, usize, f64)> = edges
        .iter()
        .map(|&(u, v)| (u, v, weights.get(u, v)))
        .collect();
    let net = Network::from_edge_list(weights.n(), &list);
    let t_meas = measure_stretch_on(&net, weights, &nodes, exec);
    Ok(SpannerResult {
        k_meas: degree.iter().copied().max().unwrap_or(0),
        k_own: ownership.max_owned,
        owners: ownership.owners,
        edges,
        t_meas,
    })
}

/// Maximum over all pairs of `d_G(u,v) / w(u,v)`; `+inf` if disconnected.
pub fn measure_stretch(network: &Network, weights: &DistMatrix) -> f64 {
    let all: Vec<usize> = (0..network.n()).collect();
    measure_stretch_on(network, weights, &all, Exec::default())
}

/// Stretch restricted to pairs inside `nodes` (paths may leave the subset).
pub fn measure_stretch_on(network: &Network, weights: &DistMatrix, nodes: &[usize], exec: Exec) -> f64 {
    let in_set = {
        let mut v = vec![false; network.n()];
        nodes.iter().for_each(|&x| v[x] = true);
        v
    };
    let per_source = par::map_slice(exec, nodes, |&s| {
        let mut dist = vec![0.0; network.n()];
        dijkstra_into(network.adjacency(), s, &mut dist, |_, _| true);
        let mut worst: f64 = 1.0;
        for (v, &d) in dist.iter().enumerate() {
            if v == s || !in_set[v] {
                continue;
            }
            let w = weights.get(s, v);
            if w > 0.0 {
                worst = worst.max(d / w);
            }
        }
        worst
    });
    per_source.into_iter().fold(1.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ownership {
    pub owners: Vec<usize>,
    pub max_owned: usize,
    /// Whether `max_owned` meets the requested cap (always true without one).
    pub feasible: bool,
}

/// Assigns every edge to one endpoint, keeping the largest per-agent count low.
///
/// Each edge starts with its lower endpoint; then, while some agent at the
/// current maximum has an alternating path of owned edges to an agent owning
/// at most `max - 2`, the path is reversed. Without a cap this ends at the
/// min-max orientation; with a cap it stops as soon as the cap is met.
pub fn distribute_ownership(n: usize, edges: &[(usize, usize)], k_cap: Option<usize>) -> Ownership {
    let mut owners: Vec<usize> = edges.iter().map(|&(u, v)| u.min(v)).collect();
    let mut out = vec![0usize; n];
    // incident edge ids per node
    let mut inc: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &(u, v)) in edges.iter().enumerate() {
        out[owners[i]] += 1;
        inc[u].push(i);
        inc[v].push(i);
    }
    let other = |i: usize, x: usize| {
        let (u, v) = edges[i];
        if u == x {
            v
        } else {
            u
        }
    };
    loop {
        let max = out.iter().copied().max().unwrap_or(0);
        if k_cap.is_some_and(|k| max <= k) || max < 2 {
            break;
        }
        let mut improved = false;
        for x in 0..n {
            if out[x] != max {
                continue;
            }
            // BFS over owned edges from x.
            let mut via = vec![usize::MAX; n];
            let mut seen = vec![false; n];
            seen[x] = true;
            let mut queue = VecDeque::from([x]);
            let mut target = None;
            while let Some(a) = queue.pop_front() {
                if out[a] + 2 <= max {
                    target = Some(a);
                    break;
                }
                for &e in &inc[a] {
                    if owners[e] != a {
                        continue;
                    }
                    let b = other(e, a);
                    if !seen[b] {
                        seen[b] = true;
                        via[b] = e;
                        queue.push_back(b);
                    }
                }
            }
            if let Some(mut y) = target {
                out[y] += 1;
                out[x] -= 1;
                while y != x {
                    let e = via[y];
                    let a = other(e, y);
                    owners[e] = y;
                    y = a;
                }
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    let max_owned = out.iter().copied().max().unwrap_or(0);
    Ownership {
        owners,
        max_owned,
        feasible: k_cap.is_none_or(|k| max_owned <= k),
    }
}
