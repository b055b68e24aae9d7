//! The game on an arbitrary complete weighted host network: metric-closure
//! reduction, host designers, the hitting-set gadget and the equilibrium
//! audit.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::designer::{algorithm1_plan, beta_formula, mst_profile_on, Algorithm1Params, BetaBound, Branch};
use crate::equilibrium::{certify_with, optimum_lower_bound, CertifyOptions, GammaReference, Mode};
use crate::error::{input, Result};
use crate::game::{dijkstra_into, dijkstra_with_parents, floyd_warshall, social_cost, Network, StrategyProfile};
use crate::geometry::{seeded_rng, DistMatrix, PointSet};
use crate::par::Exec;
use crate::spanner::measure_stretch;
use crate::REL_TOL;

/// Complete host network with symmetric positive weights (not necessarily
/// metric). Every pair is a buildable edge.
#[derive(Clone, Debug, PartialEq)]
pub struct HostNetwork {
    weights: DistMatrix,
}

/// JSON form: `weights` lists `w(i, j)` for `i = 1..n`, `j = 0..i`, row by row.
#[derive(Serialize, Deserialize)]
struct HostFile {
    n: usize,
    weights: Vec<f64>,
}

impl HostNetwork {
    pub fn new(weights: DistMatrix) -> Result<Self> {
        let n = weights.n();
        if n < 2 {
            return input("a host network needs at least 2 nodes");
        }
        for i in 0..n {
            if weights.get(i, i) != 0.0 {
                return input(format!("nonzero diagonal at node {i}"));
            }
            for j in (i + 1)..n {
                let w = weights.get(i, j);
                if !(w > 0.0 && w.is_finite()) {
                    return input(format!("weight of ({i}, {j}) must be positive and finite, got {w}"));
                }
                if w != weights.get(j, i) {
                    return input(format!("weights of ({i}, {j}) are not symmetric"));
                }
            }
        }
        Ok(Self { weights })
    }

    /// From the strict lower triangle, row-major.
    pub fn from_lower_triangle(n: usize, lower: &[f64]) -> Result<Self> {
        if lower.len() != n * n.saturating_sub(1) / 2 {
            return input(format!(
                "expected {} weights for n = {n}, got {}",
                n * n.saturating_sub(1) / 2,
                lower.len()
            ));
        }
        let mut data = vec![0.0; n * n];
        let mut k = 0;
        for i in 1..n {
            for j in 0..i {
                data[i * n + j] = lower[k];
                data[j * n + i] = lower[k];
                k += 1;
            }
        }
        Self::new(DistMatrix::from_rows(n, data))
    }

    pub fn from_points(points: &PointSet) -> Self {
        Self {
            weights: points.distances().clone(),
        }
    }

    /// Independent uniform weights in `[1, 10)`; typically far from metric.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let mut lower = Vec::with_capacity(n * n / 2);
        for i in 1..n {
            for _ in 0..i {
                lower.push(1.0 + 9.0 * rng.gen::<f64>());
            }
        }
        Self::from_lower_triangle(n, &lower)
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn weights(&self) -> &DistMatrix {
        &self.weights
    }

    pub fn lower_triangle(&self) -> Vec<f64> {
        let n = self.n();
        (1..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| self.weights.get(i, j)).collect()
    }

    /// Shortest-path distances `d_H` (Floyd-Warshall on the complete host).
    pub fn distances(&self) -> DistMatrix {
        let n = self.n();
        let mut list = Vec::with_capacity(n * n / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                list.push((i, j, self.weights.get(i, j)));
            }
        }
        floyd_warshall(&Network::from_edge_list(n, &list))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&HostFile {
            n: self.n(),
            weights: self.lower_triangle(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: HostFile = serde_json::from_str(s)?;
        Self::from_lower_triangle(f.n, &f.weights)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// The host after dropping every edge that is strictly longer than a detour.
#[derive(Clone, Debug)]
pub struct MetricReduction {
    /// Surviving edges `(u, v, w)` with `u < v`, sorted by index pair.
    pub edges: Vec<(usize, usize, f64)>,
    pub network: Network,
}

impl MetricReduction {
    /// `{"n": .., "edges": [[u, v, w], ..]}`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            n: usize,
            edges: &'a [(usize, usize, f64)],
        }
        Ok(serde_json::to_string(&Out {
            n: self.network.n(),
            edges: &self.edges,
        })?)
    }

    /// Weight matrix of the reduced host: surviving edges keep their weight,
    /// removed pairs become unavailable (infinite).
    pub fn weight_matrix(&self) -> DistMatrix {
        let n = self.network.n();
        let mut data = vec![f64::INFINITY; n * n];
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        for &(u, v, w) in &self.edges {
            data[u * n + v] = w;
            data[v * n + u] = w;
        }
        DistMatrix::from_rows(n, data)
    }
}

/// Scans edges from longest to shortest (ties by index pair) and removes an
/// edge when the remaining network offers a strictly shorter connection.
pub fn metric_closure_reduce(host: &HostNetwork) -> MetricReduction {
    reduce_weights(host.weights())
}

/// Same reduction on a raw weight matrix; infinite entries are absent edges.
/// Applying it to [`MetricReduction::weight_matrix`] reproduces the reduction.
pub fn reduce_weights(w: &DistMatrix) -> MetricReduction {
    let n = w.n();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut alive = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            if w.get(i, j).is_finite() {
                order.push((i, j));
                alive[i * n + j] = true;
                alive[j * n + i] = true;
            }
        }
    }
    order.sort_by(|a, b| w.get(b.0, b.1).total_cmp(&w.get(a.0, a.1)).then(a.cmp(b)));
    let mut adj: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| (0..n).filter(|&j| alive[i * n + j]).map(|j| (j, w.get(i, j))).collect())
        .collect();
    let mut dist = vec![0.0; n];
    for (u, v) in order {
        dijkstra_into(&adj, u, &mut dist, |a, b| !((a == u && b == v) || (a == v && b == u)));
        if dist[v] < w.get(u, v) {
            alive[u * n + v] = false;
            alive[v * n + u] = false;
            adj[u].retain(|&(x, _)| x != v);
            adj[v].retain(|&(x, _)| x != u);
        }
    }
    let edges: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| alive[i * n + j])
        .map(|(i, j)| (i, j, w.get(i, j)))
        .collect();
    let network = Network::from_edge_list(n, &edges);
    MetricReduction { edges, network }
}

/// All edges that are themselves shortest paths; the lower index owns each.
pub fn shortest_path_subgraph_profile(host: &HostNetwork) -> StrategyProfile {
    let d = host.distances();
    let w = host.weights();
    let n = host.n();
    StrategyProfile::from_owned_edges(
        n,
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| w.get(i, j) <= d.get(i, j)),
    )
}

/// Minimum spanning tree of the host, children owning the edge to their parent.
pub fn host_mst_profile(host: &HostNetwork) -> StrategyProfile {
    mst_profile_on(host.weights())
}

#[derive(Clone, Debug)]
pub struct HostDesign {
    pub profile: StrategyProfile,
    pub branch: Branch,
    /// Largest number of host edges owned by one agent.
    pub k: usize,
    /// Stretch of the built network against `d_H` on the spanned nodes.
    pub t_meas: f64,
    pub bound: BetaBound,
}

/// The cluster/spanner designer run on the shortest-path metric of the reduced
/// host. A designed link between non-adjacent nodes is realized as a shortest
/// path of host edges; each hop is bought by its endpoint closer to the
/// link's buyer.
pub fn generalized_algorithm1(host: &HostNetwork, params: &Algorithm1Params, alpha: f64) -> Result<HostDesign> {
    let n = host.n();
    let red = metric_closure_reduce(host);
    let adj = red.network.adjacency();
    let metric = host.distances();
    let plan = algorithm1_plan(&metric, params, Exec::default())?;

    let mut owned: HashSet<(usize, usize)> = HashSet::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let links = plan.spanner.owned_edges().chain(plan.attachments.iter().copied());
    for (buyer, target) in links {
        let (_, parent) = dijkstra_with_parents(adj, buyer);
        // walk from the target back to the buyer; the hop owner is the end
        // nearer to the buyer
        let mut x = target;
        while x != buyer {
            let p = parent[x];
            debug_assert!(p != usize::MAX, "reduced host is connected");
            let key = (p.min(x), p.max(x));
            if owned.insert(key) {
                pairs.push((p, x));
            }
            x = p;
        }
    }
    let profile = StrategyProfile::from_owned_edges(n, pairs);
    let k = profile.strategies.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let net = Network::build(&profile, host.weights())?;
    let t_meas = crate::spanner::measure_stretch_on(&net, &metric, &plan.core, Exec::default()).max(1.0);
    let bound = beta_formula(k as f64, t_meas, params.b, params.c, n, alpha)?;
    Ok(HostDesign {
        profile,
        branch: plan.branch,
        k,
        t_meas,
        bound,
    })
}

/// Reduction parameters derived from `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReductionParams {
    /// Nodes per star (center plus `q - 1` leaves).
    pub q: usize,
    /// Weight of the edges between `s` and the element nodes.
    pub x: f64,
    /// Copies of every set node.
    pub c: usize,
}

impl ReductionParams {
    pub fn for_alpha(alpha: f64) -> Self {
        let q = 1 + (alpha.sqrt() / 2.0).ceil() as usize;
        let q2 = (q * q) as f64;
        let x = 2.0 + 4.0 * q2 / alpha;
        let c = 1 + (alpha * x / (4.0 * q2)).ceil() as usize;
        Self { q, x, c }
    }
}

/// Host network encoding a hitting-set instance.
///
/// Star centers come first: `s = 0`, `t = 1`, element `i` at `2 + i`, copy `j`
/// of set `p` at `2 + n + p c + j`; then the `q - 1` leaves of every center
/// in center order.
#[derive(Clone, Debug)]
pub struct HittingSetInstance {
    pub universe: usize,
    pub sets: Vec<Vec<usize>>,
    pub alpha: f64,
    pub params: ReductionParams,
    pub host: HostNetwork,
    /// Base edges `(u, v, w)`; all other host weights are their shortest-path
    /// closure.
    pub base_edges: Vec<(usize, usize, f64)>,
}

pub const HS_S: usize = 0;
pub const HS_T: usize = 1;

impl HittingSetInstance {
    pub fn element_node(&self, i: usize) -> usize {
        2 + i
    }

    pub fn is_element_node(&self, v: usize) -> bool {
        (2..2 + self.universe).contains(&v)
    }

    pub fn centers(&self) -> usize {
        2 + self.universe + self.sets.len() * self.params.c
    }

    /// Base edges minus the `s`-element edges of elements outside `hitting`.
    pub fn restricted_profile(&self, hitting: &[usize]) -> StrategyProfile {
        let n = self.host.n();
        let keep: HashSet<usize> = hitting.iter().map(|&i| self.element_node(i)).collect();
        StrategyProfile::from_owned_edges(
            n,
            self.base_edges
                .iter()
                .filter(|&&(u, v, _)| u != HS_S || !self.is_element_node(v) || keep.contains(&v))
                .map(|&(u, v, _)| (u, v)),
        )
    }

    pub fn is_hitting(&self, hitting: &[usize]) -> bool {
        self.sets.iter().all(|s| s.iter().any(|e| hitting.contains(e)))
    }

    pub fn restricted_cost(&self, hitting: &[usize]) -> Result<f64> {
        social_cost(&self.restricted_profile(hitting), self.host.weights(), self.alpha)
    }

    /// Evaluates every hitting set of the restricted family.
    pub fn restricted_family(&self) -> Result<Vec<FamilyMember>> {
        let n = self.universe;
        if n > 20 {
            return Err(crate::Error::TooLarge { n, limit: 20 });
        }
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            let k: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            if !self.is_hitting(&k) {
                continue;
            }
            let social_cost = self.restricted_cost(&k)?;
            out.push(FamilyMember {
                intercept: social_cost - 2.0 * self.alpha * k.len() as f64,
                hitting: k,
                social_cost,
            });
        }
        Ok(out)
    }

    /// Cheapest member of the restricted family (first in mask order on ties).
    pub fn restricted_minimizer(&self) -> Result<FamilyMember> {
        let fam = self.restricted_family()?;
        let mut best = fam[0].clone();
        for m in fam {
            if m.social_cost < best.social_cost * (1.0 - REL_TOL) {
                best = m;
            }
        }
        Ok(best)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyMember {
    pub hitting: Vec<usize>,
    pub social_cost: f64,
    /// `social_cost - 2 alpha |hitting|`.
    pub intercept: f64,
}

/// Builds the reduction host for universe `{0, .., universe-1}` and `sets`.
pub fn hitting_set_instance(universe: usize, sets: &[Vec<usize>], alpha: f64) -> Result<HittingSetInstance> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return input(format!("alpha must be positive, got {alpha}"));
    }
    if universe == 0 || sets.is_empty() {
        return input("need a nonempty universe and at least one set");
    }
    let mut covered = vec![false; universe];
    let mut clean: Vec<Vec<usize>> = Vec::with_capacity(sets.len());
    for (p, s) in sets.iter().enumerate() {
        if s.is_empty() {
            return input(format!("set {p} is empty"));
        }
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        if let Some(&e) = s.iter().find(|&&e| e >= universe) {
            return input(format!("set {p} names element {e} outside the universe"));
        }
        s.iter().for_each(|&e| covered[e] = true);
        clean.push(s);
    }
    if let Some(e) = covered.iter().position(|c| !c) {
        return input(format!("element {e} belongs to no set"));
    }
    let params = ReductionParams::for_alpha(alpha);
    let (q, c, m) = (params.q, params.c, clean.len());
    let centers = 2 + universe + m * c;
    let total = centers * q;
    let mut base = Vec::new();
    for i in 0..universe {
        base.push((HS_S, 2 + i, params.x));
    }
    for (p, s) in clean.iter().enumerate() {
        for j in 0..c {
            let node = 2 + universe + p * c + j;
            for &e in s {
                base.push((2 + e, node, 1.0));
            }
            base.push((HS_T, node, 1.0));
        }
    }
    for v in 0..centers {
        for l in 0..q - 1 {
            base.push((v, centers + v * (q - 1) + l, 1.0));
        }
    }
    for e in &mut base {
        if e.0 > e.1 {
            std::mem::swap(&mut e.0, &mut e.1);
        }
    }
    base.sort_by_key(|a| (a.0, a.1));
    let closure = floyd_warshall(&Network::from_edge_list(total, &base));
    let host = HostNetwork::new(closure)?;
    // the closure must not shortcut any base edge
    debug_assert!(base.iter().all(|&(u, v, w)| host.weights().get(u, v) == w));
    Ok(HittingSetInstance {
        universe,
        sets: clean,
        alpha,
        params,
        host,
        base_edges: base,
    })
}

/// Parses `"1,2;2,3"` (1-based elements, `;` between sets) into 0-based sets.
pub fn parse_sets(spec: &str) -> Result<Vec<Vec<usize>>> {
    spec.split(';')
        .map(|set| {
            set.split(',')
                .map(|e| {
                    let v: usize = e
                        .trim()
                        .parse()
                        .map_err(|_| crate::Error::Input(format!("bad element {e:?} in {spec:?}")))?;
                    if v == 0 {
                        return input("elements are numbered from 1");
                    }
                    Ok(v - 1)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HostAuditEntry {
    pub social_cost: f64,
    /// `social_cost` over the optimum lower bound.
    pub ratio: f64,
    /// Largest `d_G(u,v) / d_H(u,v)`.
    pub stretch: f64,
    pub spanner_ok: bool,
    pub ratio_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HostAudit {
    pub alpha: f64,
    pub lower_bound: f64,
    pub entries: Vec<HostAuditEntry>,
    pub max_ratio: f64,
    pub max_stretch: f64,
    /// `2 (alpha + 1)`.
    pub ratio_bound: f64,
}

impl HostAudit {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.spanner_ok && e.ratio_ok)
    }
}

/// Checks that every given equilibrium is an `(alpha+1)`-spanner of the host
/// and costs at most `2 (alpha + 1)` times the optimum lower bound
/// `alpha w(MST(H)) + sum d_H`. Every profile must pass an exact NE check.
pub fn host_poa_audit(host: &HostNetwork, alpha: f64, equilibria: &[StrategyProfile]) -> Result<HostAudit> {
    let d = host.distances();
    let lower_bound = optimum_lower_bound(host.weights(), &d, alpha);
    let opts = CertifyOptions {
        mode: Mode::Exact,
        gamma: GammaReference::LowerBound(lower_bound),
        ..CertifyOptions::default()
    };
    let ratio_bound = 2.0 * (alpha + 1.0);
    let mut entries = Vec::with_capacity(equilibria.len());
    for (i, p) in equilibria.iter().enumerate() {
        let cert = certify_with(p, host.weights(), alpha, &opts)?;
        if !cert.is_ne() {
            return input(format!("profile {i} is not a NE (beta = {})", cert.beta));
        }
        let net = Network::build(p, host.weights())?;
        let stretch = measure_stretch(&net, &d);
        let ratio = cert.social_cost / lower_bound;
        entries.push(HostAuditEntry {
            social_cost: cert.social_cost,
            ratio,
            stretch,
            spanner_ok: stretch <= (alpha + 1.0) * (1.0 + REL_TOL),
            ratio_ok: ratio <= ratio_bound * (1.0 + REL_TOL),
        });
    }
    Ok(HostAudit {
        alpha,
        lower_bound,
        max_ratio: entries.iter().map(|e| e.ratio).fold(0.0, f64::max),
        max_stretch: entries.iter().map(|e| e.stretch).fold(0.0, f64::max),
        entries,
        ratio_bound,
    })
}
