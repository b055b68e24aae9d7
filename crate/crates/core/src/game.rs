//! Strategy profiles, the networks they induce, shortest paths and costs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::geometry::DistMatrix;
use crate::par::{self, Exec};

/// Per-agent sets of bought edges: `strategies[u]` lists the targets of `u`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub strategies: Vec<Vec<usize>>,
}

impl StrategyProfile {
    pub fn empty(n: usize) -> Self {
        Self {
            strategies: vec![Vec::new(); n],
        }
    }

    pub fn new(strategies: Vec<Vec<usize>>) -> Result<Self> {
        let p = Self { strategies };
        p.validate()?;
        Ok(p.canonical())
    }

    /// Builds a profile from `(owner, target)` pairs.
    pub fn from_owned_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut p = Self::empty(n);
        for (owner, target) in edges {
            p.strategies[owner].push(target);
        }
        p.canonical()
    }

    pub fn n(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategy(&self, u: usize) -> &[usize] {
        &self.strategies[u]
    }

    pub fn set_strategy(&mut self, u: usize, mut s: Vec<usize>) {
        s.sort_unstable();
        s.dedup();
        self.strategies[u] = s;
    }

    /// No self loops, all targets in range, no repeated target.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for (u, s) in self.strategies.iter().enumerate() {
            let mut seen = vec![false; n];
            for &v in s {
                if v >= n {
                    return input(format!("agent {u} targets {v}, out of range (n = {n})"));
                }
                if v == u {
                    return input(format!("agent {u} buys a self loop"));
                }
                if seen[v] {
                    return input(format!("agent {u} lists target {v} twice"));
                }
                seen[v] = true;
            }
        }
        Ok(())
    }

    /// Each strategy sorted ascending and deduplicated. Two profiles describe the
    /// same game state iff their canonical forms are equal.
    pub fn canonical(&self) -> Self {
        let mut p = self.clone();
        for s in &mut p.strategies {
            s.sort_unstable();
            s.dedup();
        }
        p
    }

    pub fn has_double_buy(&self) -> bool {
        self.strategies
            .iter()
            .enumerate()
            .any(|(u, s)| s.iter().any(|&v| self.strategies[v].contains(&u)))
    }

    pub fn edge_count(&self) -> usize {
        self.strategies.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p.canonical())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub len: f64,
    /// One owner, or two when the edge was bought from both sides.
    pub owners: Vec<usize>,
}

/// Undirected weighted network with per-edge ownership.
#[derive(Clone, Debug)]
pub struct Network {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
    double_buy: bool,
}

impl Network {
    /// The union of all bought edges, lengths taken from `weights`.
    pub fn build(profile: &StrategyProfile, weights: &DistMatrix) -> Result<Self> {
        profile.validate()?;
        let n = profile.n();
        if weights.n() != n {
            return input(format!(
                "profile has {n} agents but the weight matrix has {}",
                weights.n()
            ));
        }
        let mut index = std::collections::HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut double_buy = false;
        for (u, s) in profile.strategies.iter().enumerate() {
            for &v in s {
                let key = (u.min(v), u.max(v));
                match index.get(&key) {
                    Some(&i) => {
                        let e: &mut Edge = &mut edges[i];
                        if !e.owners.contains(&u) {
                            e.owners.push(u);
                            double_buy = true;
                        }
                    }
                    None => {
                        if !weights.get(u, v).is_finite() {
                            return input(format!("edge ({u}, {v}) is not available"));
                        }
                        index.insert(key, edges.len());
                        edges.push(Edge {
                            u: key.0,
                            v: key.1,
                            len: weights.get(u, v),
                            owners: vec![u],
                        });
                    }
                }
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        Ok(Self::from_edges(n, edges, double_buy))
    }

    /// A network from unowned undirected edges `(u, v, len)`; each edge is
    /// attributed to its lower endpoint.
    pub fn from_edge_list(n: usize, list: &[(usize, usize, f64)]) -> Self {
        let edges = list
            .iter()
            .map(|&(u, v, len)| Edge {
                u: u.min(v),
                v: u.max(v),
                len,
                owners: vec![u.min(v)],
            })
            .collect();
        Self::from_edges(n, edges, false)
    }

    fn from_edges(n: usize, edges: Vec<Edge>, double_buy: bool) -> Self {
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.u].push((e.v, e.len));
            adj[e.v].push((e.u, e.len));
        }
        Self {
            n,
            edges,
            adj,
            double_buy,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adj
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn has_double_buy(&self) -> bool {
        self.double_buy
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.len).sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over an adjacency list; unreachable is `+inf`.
pub fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dijkstra_into(adj, src, &mut dist, |_, _| true);
    dist
}

/// Dijkstra writing into `dist`, skipping every edge for which
/// `keep(from, to)` is false.
pub fn dijkstra_into(
    adj: &[Vec<(usize, f64)>],
    src: usize,
    dist: &mut [f64],
    keep: impl Fn(usize, usize) -> bool,
) {
    dist.iter_mut().for_each(|d| *d = f64::INFINITY);
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem { dist: 0.0, node: src });
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            if !keep(u, v) {
                continue;
            }
            let nd = d + w;
            debug_assert!(!nd.is_nan());
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem { dist: nd, node: v });
            }
        }
    }
}

/// Shortest-path tree predecessors from `src` (`usize::MAX` for the root and
/// unreachable nodes), with ties resolved towards the lower predecessor index.
pub fn dijkstra_with_parents(adj: &[Vec<(usize, f64)>], src: usize) -> (Vec<f64>, Vec<usize>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem { dist: 0.0, node: src });
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] || (nd == dist[v] && u < parent[v] && v != src) {
                if nd < dist[v] {
                    heap.push(HeapItem { dist: nd, node: v });
                }
                dist[v] = nd;
                parent[v] = u;
            }
        }
    }
    (dist, parent)
}

/// All-pairs shortest path distances by one Dijkstra per source.
pub fn all_pairs_distances(network: &Network) -> DistMatrix {
    all_pairs_distances_with(network, Exec::default())
}

pub fn all_pairs_distances_with(network: &Network, exec: Exec) -> DistMatrix {
    let n = network.n();
    let rows = par::map_range(exec, n, |s| dijkstra(network.adjacency(), s));
    let mut data = rows.concat();
    // summation order differs between the two directions; keep the smaller
    for i in 0..n {
        for j in (i + 1)..n {
            let m = data[i * n + j].min(data[j * n + i]);
            data[i * n + j] = m;
            data[j * n + i] = m;
        }
    }
    DistMatrix::from_rows(n, data)
}

/// Floyd-Warshall; kept as an independent check of the Dijkstra route.
pub fn floyd_warshall(network: &Network) -> DistMatrix {
    let n = network.n();
    let mut d = vec![f64::INFINITY; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    for e in network.edges() {
        let (a, b) = (e.u * n + e.v, e.v * n + e.u);
        d[a] = d[a].min(e.len);
        d[b] = d[b].min(e.len);
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let cand = dik + d[k * n + j];
                if cand < d[i * n + j] {
                    d[i * n + j] = cand;
                }
            }
        }
    }
    DistMatrix::from_rows(n, d)
}

/// Per-agent edge cost, distance cost and total, plus the social cost.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub alpha: f64,
    pub edge_cost: Vec<f64>,
    pub distance_cost: Vec<f64>,
    pub total: Vec<f64>,
    pub social_cost: f64,
}

impl CostReport {
    /// CSV rows `agent,edge_cost,dist_cost,total` followed by a `social` row
    /// holding the column sums.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["agent", "edge_cost", "dist_cost", "total"])?;
        for u in 0..self.total.len() {
            w.write_record([
                u.to_string(),
                self.edge_cost[u].to_string(),
                self.distance_cost[u].to_string(),
                self.total[u].to_string(),
            ])?;
        }
        w.write_record([
            "social".to_string(),
            self.edge_cost.iter().sum::<f64>().to_string(),
            self.distance_cost.iter().sum::<f64>().to_string(),
            self.social_cost.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Exact costs of every agent. Double-bought edges are charged to both owners.
pub fn cost_report(profile: &StrategyProfile, network: &Network, alpha: f64) -> CostReport {
    let dist = all_pairs_distances(network);
    cost_report_with_distances(profile, network, &dist, alpha)
}

pub fn cost_report_with_distances(
    profile: &StrategyProfile,
    network: &Network,
    dist: &DistMatrix,
    alpha: f64,
) -> CostReport {
    let n = profile.n();
    let mut owned_len = vec![0.0; n];
    for e in network.edges() {
        for &o in &e.owners {
            owned_len[o] += e.len;
        }
    }
    let edge_cost: Vec<f64> = owned_len.iter().map(|l| alpha * l).collect();
    let distance_cost: Vec<f64> = (0..n).map(|u| dist.row(u).iter().sum()).collect();
    let total: Vec<f64> = edge_cost
        .iter()
        .zip(&distance_cost)
        .map(|(a, b)| a + b)
        .collect();
    let social_cost = total.iter().sum();
    CostReport {
        alpha,
        edge_cost,
        distance_cost,
        total,
        social_cost,
    }
}

/// Social cost of a profile on a weight matrix.
pub fn social_cost(profile: &StrategyProfile, weights: &DistMatrix, alpha: f64) -> Result<f64> {
    let net = Network::build(profile, weights)?;
    Ok(cost_report(profile, &net, alpha).social_cost)
}
