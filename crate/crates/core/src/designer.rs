//! Network designers: the cluster/spanner designer with its provable `beta`,
//! automatic parameter choice, and the MST, clique, star, grid and best-of
//! baselines.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::game::{social_cost, StrategyProfile};
use crate::geometry::{DistMatrix, PointSet};
use crate::par::Exec;
use crate::spanner::{greedy_spanner_with, SpannerParams, SpannerResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Algorithm1Params {
    /// Ball-radius divisor, `b >= 1`.
    pub b: f64,
    /// Cluster threshold, `0 <= c <= n - 1`.
    pub c: f64,
    /// Spanner stretch target, `t > 1`.
    pub t: f64,
}

impl Algorithm1Params {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.b >= 1.0) {
            return input(format!("b must be >= 1, got {}", self.b));
        }
        if !(self.c >= 0.0 && self.c <= (n as f64 - 1.0)) {
            return input(format!("c must lie in [0, n-1] = [0, {}], got {}", n - 1, self.c));
        }
        if !(self.t > 1.0) {
            return input(format!("t must exceed 1, got {}", self.t));
        }
        Ok(())
    }
}

/// `B_v` (radius `w_max/b`) and `C_v` (radius `2 w_max/b`) for every node.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodSets {
    pub ball: Vec<Vec<usize>>,
    pub closed: Vec<Vec<usize>>,
}

pub fn neighborhoods(weights: &DistMatrix, b: f64) -> NeighborhoodSets {
    let n = weights.n();
    let w_max = weights.max();
    let (r1, r2) = (w_max / b, 2.0 * w_max / b);
    let mut ball = vec![Vec::new(); n];
    let mut closed = vec![Vec::new(); n];
    for v in 0..n {
        for (u, &w) in weights.row(v).iter().enumerate() {
            if w <= r1 {
                ball[v].push(u);
            }
            if w <= r2 {
                closed[v].push(u);
            }
        }
    }
    NeighborhoodSets { ball, closed }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// A node `center` has fewer than `c` nodes outside its ball.
    Cluster { center: usize },
    /// No cluster: a spanner on all points.
    Sparse,
}

/// The four terms of the designer's stability/efficiency bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaBound {
    /// `k b / c * alpha + t`; absent when `c = 0`.
    pub sparse: Option<f64>,
    /// `4 k / b * alpha + 2 t + 1`.
    pub cluster_core: f64,
    /// `2 alpha / (n - c) + 2`.
    pub leaf_alpha: f64,
    /// `4 c (b + 2 t) / (n - c) + 6 t`.
    pub leaf_spread: f64,
    pub beta: f64,
    /// Equal to `beta`: the same bound caps the social cost ratio.
    pub gamma: f64,
}

impl BetaBound {
    pub fn terms(&self) -> Vec<f64> {
        self.sparse
            .into_iter()
            .chain([self.cluster_core, self.leaf_alpha, self.leaf_spread])
            .collect()
    }

    /// The part of the bound that covers the branch actually taken.
    pub fn for_branch(&self, branch: Branch) -> f64 {
        match (branch, self.sparse) {
            (Branch::Sparse, Some(s)) => s,
            (Branch::Sparse, None) => self.beta,
            (Branch::Cluster { .. }, _) => self
                .cluster_core
                .max(self.leaf_alpha)
                .max(self.leaf_spread),
        }
    }
}

/// `beta = max{ kb/c alpha + t, 4k/b alpha + 2t + 1, 2 alpha/(n-c) + 2, 4c(b+2t)/(n-c) + 6t }`.
pub fn beta_formula(k: f64, t: f64, b: f64, c: f64, n: usize, alpha: f64) -> Result<BetaBound> {
    let nf = n as f64;
    if c >= nf {
        return input(format!("c = {c} must be below n = {n}"));
    }
    let sparse = (c > 0.0).then(|| k * b / c * alpha + t);
    let cluster_core = 4.0 * k / b * alpha + 2.0 * t + 1.0;
    let leaf_alpha = 2.0 * alpha / (nf - c) + 2.0;
    let leaf_spread = 4.0 * c * (b + 2.0 * t) / (nf - c) + 6.0 * t;
    let beta = sparse
        .unwrap_or(f64::NEG_INFINITY)
        .max(cluster_core)
        .max(leaf_alpha)
        .max(leaf_spread);
    Ok(BetaBound {
        sparse,
        cluster_core,
        leaf_alpha,
        leaf_spread,
        beta,
        gamma: beta,
    })
}

/// Default spanner stretch used by [`choose_params`].
pub const DEFAULT_STRETCH: f64 = 1.5;

/// Picks `(b, c)` from the regime `alpha = n^x`: `b = alpha^(1/(2x))` for
/// `x >= 1`, `b = alpha^((x+1)/(4x))` for `0 < x < 1`, and `c = b^2 / 2`.
/// For `alpha <= 1` or `n < 3` the exponent is degenerate and the fallback
/// `b = 4, c = max(1, n/32)` is used.
pub fn choose_params(alpha: f64, n: usize) -> Algorithm1Params {
    let t = DEFAULT_STRETCH;
    if alpha <= 1.0 || n < 3 {
        let c = (n as f64 / 32.0).max(1.0).min(n as f64 - 1.0);
        return Algorithm1Params { b: 4.0, c, t };
    }
    let nf = n as f64;
    let x = alpha.ln() / nf.ln();
    let b = if x >= 1.0 {
        alpha.powf(1.0 / (2.0 * x))
    } else {
        alpha.powf((x + 1.0) / (4.0 * x))
    };
    let b_cap = (2.0 * (nf - 1.0)).sqrt();
    debug_assert!(b <= b_cap * (1.0 + 1e-9), "b = {b} exceeds sqrt(2(n-1)) = {b_cap}");
    let b = b.clamp(1.0, b_cap);
    let c = (b * b / 2.0).min(nf - 1.0);
    Algorithm1Params { b, c, t }
}

/// The designer's decisions before edges are turned into strategies.
#[derive(Clone, Debug)]
pub struct Algorithm1Plan {
    pub branch: Branch,
    /// The spanned node set (`C_v` or all nodes).
    pub core: Vec<usize>,
    pub spanner: SpannerResult,
    /// `(u, u')`: node `u` outside `C_v` attaches to its closest `u'` in `C_v`.
    pub attachments: Vec<(usize, usize)>,
}

/// Runs the designer over an arbitrary metric given as a weight matrix.
pub fn algorithm1_plan(weights: &DistMatrix, params: &Algorithm1Params, exec: Exec) -> Result<Algorithm1Plan> {
    let n = weights.n();
    if n < 2 {
        return input("designer needs at least 2 nodes");
    }
    params.validate(n)?;
    let sets = neighborhoods(weights, params.b);
    // candidates with |P \ B_v| < c; prefer the largest ball, then the lowest index
    let center = (0..n)
        .filter(|&v| ((n - sets.ball[v].len()) as f64) < params.c)
        .max_by(|&a, &b| sets.ball[a].len().cmp(&sets.ball[b].len()).then(b.cmp(&a)));
    let sp = SpannerParams {
        t: params.t,
        k_cap: None,
    };
    match center {
        Some(v) => {
            let core = sets.closed[v].clone();
            let spanner = greedy_spanner_with(weights, &core, sp, exec)?;
            let mut in_core = vec![false; n];
            core.iter().for_each(|&x| in_core[x] = true);
            let attachments = (0..n)
                .filter(|&u| !in_core[u])
                .map(|u| {
                    let target = core
                        .iter()
                        .copied()
                        .min_by(|&a, &b| weights.get(u, a).total_cmp(&weights.get(u, b)).then(a.cmp(&b)))
                        .expect("C_v contains v");
                    (u, target)
                })
                .collect();
            Ok(Algorithm1Plan {
                branch: Branch::Cluster { center: v },
                core,
                spanner,
                attachments,
            })
        }
        None => {
            let core: Vec<usize> = (0..n).collect();
            let spanner = greedy_spanner_with(weights, &core, sp, exec)?;
            Ok(Algorithm1Plan {
                branch: Branch::Sparse,
                core,
                spanner,
                attachments: Vec::new(),
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct Algorithm1Output {
    pub profile: StrategyProfile,
    pub params: Algorithm1Params,
    pub branch: Branch,
    /// Measured ownership cap of the spanner part (at least 1).
    pub k: usize,
    /// Measured stretch of the spanner on its node set.
    pub t_meas: f64,
    pub spanner: SpannerResult,
    pub bound: BetaBound,
}

/// The cluster/spanner designer on a Euclidean point set.
pub fn algorithm1(points: &PointSet, params: &Algorithm1Params, alpha: f64) -> Result<Algorithm1Output> {
    algorithm1_with(points, params, alpha, Exec::default())
}

pub fn algorithm1_with(points: &PointSet, params: &Algorithm1Params, alpha: f64, exec: Exec) -> Result<Algorithm1Output> {
    let plan = algorithm1_plan(points.distances(), params, exec)?;
    let n = points.len();
    let profile = StrategyProfile::from_owned_edges(
        n,
        plan.spanner.owned_edges().chain(plan.attachments.iter().copied()),
    );
    let k = plan.spanner.k_own.max(1);
    let t_meas = plan.spanner.t_meas;
    let bound = beta_formula(k as f64, t_meas, params.b, params.c, n, alpha)?;
    Ok(Algorithm1Output {
        profile,
        params: *params,
        branch: plan.branch,
        k,
        t_meas,
        spanner: plan.spanner,
        bound,
    })
}

/// Kruskal MST edges, ties broken by the index pair.
pub fn mst_edges(weights: &DistMatrix) -> Vec<(usize, usize)> {
    let n = weights.n();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((weights.get(i, j), i, j));
        }
    }
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for (_, i, j) in pairs {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            out.push((i, j));
            if out.len() + 1 == n {
                break;
            }
        }
    }
    out
}

/// Orients a tree towards `root`: every other node owns the edge to its parent.
pub fn orient_tree(n: usize, edges: &[(usize, usize)], root: usize) -> StrategyProfile {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    StrategyProfile::from_owned_edges(
        n,
        (0..n).filter(|&v| parent[v] != usize::MAX).map(|v| (v, parent[v])),
    )
}

/// MST with child-to-parent ownership from root 0.
pub fn mst_profile_on(weights: &DistMatrix) -> StrategyProfile {
    orient_tree(weights.n(), &mst_edges(weights), 0)
}

pub fn mst_profile(points: &PointSet) -> StrategyProfile {
    mst_profile_on(points.distances())
}

/// Complete network; the lower index owns each edge.
pub fn clique_profile(n: usize) -> StrategyProfile {
    StrategyProfile::from_owned_edges(n, (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))))
}

/// Center-sponsored star.
pub fn star_profile(n: usize, center: usize) -> Result<StrategyProfile> {
    if center >= n {
        return input(format!("star center {center} out of range (n = {n})"));
    }
    Ok(StrategyProfile::from_owned_edges(
        n,
        (0..n).filter(|&v| v != center).map(|v| (center, v)),
    ))
}

/// Nearest-neighbour grid network; nodes with even coordinate sum buy all
/// their incident edges. Returns the profile and the grid dimension.
pub fn grid_profile(points: &PointSet) -> Result<(StrategyProfile, usize)> {
    let d = points.dim();
    let mut keys: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for (i, p) in points.points().iter().enumerate() {
        let mut key = Vec::with_capacity(d);
        for (k, &c) in p.coords.iter().enumerate() {
            if c.fract() != 0.0 || c.abs() > 1e15 {
                return input("grid designer needs integer coordinates");
            }
            let c = c as i64;
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
            key.push(c);
        }
        keys.insert(key, i);
    }
    let expected: u128 = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as u128).product();
    if expected != points.len() as u128 {
        return input("points do not form a full integer grid");
    }
    let mut owned = Vec::new();
    for (key, &i) in &keys {
        if key.iter().sum::<i64>().rem_euclid(2) != 0 {
            continue;
        }
        for k in 0..d {
            for step in [-1i64, 1] {
                let mut nb = key.clone();
                nb[k] += step;
                if let Some(&j) = keys.get(&nb) {
                    owned.push((i, j));
                }
            }
        }
    }
    Ok((StrategyProfile::from_owned_edges(points.len(), owned), d))
}

/// Runs the designer with [`choose_params`] and the MST, returning the profile
/// of smaller social cost (ties go to the designer) and which one won.
pub fn best_of(points: &PointSet, alpha: f64) -> Result<(StrategyProfile, Designer)> {
    let params = choose_params(alpha, points.len());
    let alg = algorithm1(points, &params, alpha)?;
    let mst = mst_profile(points);
    let sc_alg = social_cost(&alg.profile, points.distances(), alpha)?;
    let sc_mst = social_cost(&mst, points.distances(), alpha)?;
    if sc_alg <= sc_mst {
        Ok((alg.profile, Designer::Alg1))
    } else {
        Ok((mst, Designer::Mst))
    }
}

/// Designers selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Designer {
    Alg1,
    Mst,
    Clique,
    Star,
    Grid,
    Best,
}

impl Designer {
    pub const ALL: [Designer; 6] = [
        Designer::Alg1,
        Designer::Mst,
        Designer::Clique,
        Designer::Star,
        Designer::Grid,
        Designer::Best,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Designer::Alg1 => "alg1",
            Designer::Mst => "mst",
            Designer::Clique => "clique",
            Designer::Star => "star",
            Designer::Grid => "grid",
            Designer::Best => "best",
        }
    }
}

impl fmt::Display for Designer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Designer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Designer::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown designer {s:?} (alg1|mst|clique|star|grid|best)")))
    }
}

/// A designed profile with the bound that comes with its designer.
#[derive(Clone, Debug)]
pub struct Design {
    pub designer: Designer,
    pub profile: StrategyProfile,
    /// Upper bound on `beta` (and `gamma`) guaranteed for this designer:
    /// the formula for alg1/best, `n-1` for MST, `alpha+1` for the clique,
    /// `2d` for the grid; `None` for the star.
    pub bound: Option<f64>,
    pub alg1: Option<Algorithm1Output>,
}

/// Dispatches to a designer by name. `star` uses center 0.
pub fn design(points: &PointSet, designer: Designer, alpha: f64) -> Result<Design> {
    let n = points.len();
    let (profile, bound, alg1) = match designer {
        Designer::Alg1 => {
            let out = algorithm1(points, &choose_params(alpha, n), alpha)?;
            (out.profile.clone(), Some(out.bound.beta), Some(out))
        }
        Designer::Best => {
            let params = choose_params(alpha, n);
            let out = algorithm1(points, &params, alpha)?;
            let mst = mst_profile(points);
            let sc_alg = social_cost(&out.profile, points.distances(), alpha)?;
            let sc_mst = social_cost(&mst, points.distances(), alpha)?;
            if sc_alg <= sc_mst {
                (out.profile.clone(), Some(out.bound.beta), Some(out))
            } else {
                (mst, Some(n as f64 - 1.0), None)
            }
        }
        Designer::Mst => (mst_profile(points), Some(n as f64 - 1.0), None),
        Designer::Clique => (clique_profile(n), Some(alpha + 1.0), None),
        Designer::Star => (star_profile(n, 0)?, None, None),
        Designer::Grid => {
            let (p, d) = grid_profile(points)?;
            (p, Some(2.0 * d as f64), None)
        }
    };
    Ok(Design {
        designer,
        profile,
        bound,
        alg1,
    })
}
