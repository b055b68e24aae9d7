//! Social optimum: exhaustive branch and bound for tiny instances and a
//! cheap lower bound for everything else.

use crate::designer::{clique_profile, mst_profile_on};
use crate::error::{Error, Result};
use crate::game::social_cost;
use crate::geometry::DistMatrix;

/// Largest `n` handled by [`brute_force_optimum`].
pub const OPTIMUM_LIMIT: usize = 7;

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub social_cost: f64,
    /// Undirected edges `(i, j)`, `i < j`, each bought once.
    pub edges: Vec<(usize, usize)>,
}

/// Exact minimum social cost over all edge sets with single ownership.
/// Edges with infinite weight are unavailable.
pub fn brute_force_optimum(weights: &DistMatrix, alpha: f64) -> Result<Optimum> {
    let n = weights.n();
    if n > OPTIMUM_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: OPTIMUM_LIMIT,
        });
    }
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = weights.get(i, j);
            if w.is_finite() {
                edges.push((w, i, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut best_cost = f64::INFINITY;
    let mut best_mask = 0u32;
    // seed the incumbent with the MST and, when complete, the clique
    let seeds = [Some(mst_profile_on(weights)), edges.len().eq(&(n * (n - 1) / 2)).then(|| clique_profile(n))];
    for p in seeds.into_iter().flatten() {
        let sc = social_cost(&p, weights, alpha)?;
        if sc < best_cost {
            best_cost = sc;
            best_mask = 0;
            for (u, s) in p.strategies.iter().enumerate() {
                for &v in s {
                    let key = (u.min(v), u.max(v));
                    let k = edges.iter().position(|e| (e.1, e.2) == key).expect("edge available");
                    best_mask |= 1 << k;
                }
            }
        }
    }

    let mut bb = BranchAndBound {
        n,
        alpha,
        edges: &edges,
        best_cost,
        best_mask,
        dist: vec![0.0; n * n],
    };
    bb.search(0, 0, 0.0);
    let out: Vec<(usize, usize)> = (0..edges.len())
        .filter(|&k| bb.best_mask >> k & 1 == 1)
        .map(|k| (edges[k].1, edges[k].2))
        .collect();
    Ok(Optimum {
        social_cost: bb.best_cost,
        edges: out,
    })
}

struct BranchAndBound<'a> {
    n: usize,
    alpha: f64,
    edges: &'a [(f64, usize, usize)],
    best_cost: f64,
    best_mask: u32,
    dist: Vec<f64>,
}

impl BranchAndBound<'_> {
    /// Social cost lower bound for every completion of `included` using edges
    /// from index `next` on: cheapest connecting completion plus distances in
    /// the graph that keeps every undecided edge.
    fn bound(&mut self, included: u32, next: usize, weight: f64) -> f64 {
        let n = self.n;
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(c: &mut [usize], mut x: usize) -> usize {
            while c[x] != x {
                c[x] = c[c[x]];
                x = c[x];
            }
            x
        }
        let mut parts = n;
        for (k, e) in self.edges.iter().enumerate() {
            if included >> k & 1 == 1 {
                let (a, b) = (find(&mut comp, e.1), find(&mut comp, e.2));
                if a != b {
                    comp[a] = b;
                    parts -= 1;
                }
            }
        }
        let mut extra = 0.0;
        for e in &self.edges[next..] {
            if parts == 1 {
                break;
            }
            let (a, b) = (find(&mut comp, e.1), find(&mut comp, e.2));
            if a != b {
                comp[a] = b;
                parts -= 1;
                extra += e.0;
            }
        }
        if parts > 1 {
            return f64::INFINITY;
        }
        let d = &mut self.dist;
        d.iter_mut().for_each(|x| *x = f64::INFINITY);
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        for (k, e) in self.edges.iter().enumerate() {
            if k >= next || included >> k & 1 == 1 {
                d[e.1 * n + e.2] = e.0;
                d[e.2 * n + e.1] = e.0;
            }
        }
        floyd(d, n);
        self.alpha * (weight + extra) + d.iter().sum::<f64>()
    }

    fn search(&mut self, included: u32, next: usize, weight: f64) {
        let lb = self.bound(included, next, weight);
        if lb >= self.best_cost * (1.0 - 1e-12) {
            return;
        }
        if next == self.edges.len() {
            // everything decided: the bound is the exact social cost
            self.best_cost = lb;
            self.best_mask = included;
            return;
        }
        let w = self.edges[next].0;
        self.search(included | 1 << next, next + 1, weight + w);
        self.search(included, next + 1, weight);
    }
}

fn floyd(d: &mut [f64], n: usize) {
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let c = dik + d[k * n + j];
                if c < d[i * n + j] {
                    d[i * n + j] = c;
                }
            }
        }
    }
}

/// Weight of a minimum spanning tree over the finite entries (Prim, O(n^2)).
/// Infinite if the finite entries do not connect all nodes.
pub fn mst_weight(weights: &DistMatrix) -> f64 {
    let n = weights.n();
    if n == 0 {
        return 0.0;
    }
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    key[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..n {
        let mut pick = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (pick == usize::MAX || key[v] < key[pick]) {
                pick = v;
            }
        }
        if !key[pick].is_finite() {
            return f64::INFINITY;
        }
        in_tree[pick] = true;
        total += key[pick];
        for (v, &w) in weights.row(pick).iter().enumerate() {
            if !in_tree[v] && w < key[v] {
                key[v] = w;
            }
        }
    }
    total
}

/// `alpha * w(MST of weights) + sum over ordered pairs of metric(u, v)`, where
/// `metric` is the shortest-path metric that the network distances can never
/// beat (the weights themselves for point sets).
pub fn optimum_lower_bound(weights: &DistMatrix, metric: &DistMatrix, alpha: f64) -> f64 {
    let n = metric.n();
    let pairs: f64 = (0..n).map(|u| metric.row(u).iter().sum::<f64>()).sum();
    alpha * mst_weight(weights) + pairs
}
