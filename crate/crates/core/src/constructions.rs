//! Named instances with known costs: the exponential chain on the line, the
//! high-dimensional star, and the three-cluster triangle family.

use serde::Serialize;

use crate::designer::star_profile;
use crate::equilibrium::{
    certify_with, heuristic_moves, BetaKind, CertifyOptions, GameState, GammaReference, Mode, Move, EXHAUSTIVE_LIMIT,
};
use crate::error::{input, Result};
use crate::game::{cost_report, Network, StrategyProfile};
use crate::geometry::PointSet;

/// Default spread of a cluster of almost co-located points.
pub const DEFAULT_EPSILON: f64 = 1e-6;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return input(format!("alpha must be positive and finite, got {alpha}"));
    }
    Ok(())
}

fn sc(profile: &StrategyProfile, points: &PointSet, alpha: f64) -> Result<f64> {
    let net = Network::build(profile, points.distances())?;
    Ok(cost_report(profile, &net, alpha).social_cost)
}

/// Exact `beta` when `n` is within the exhaustive limit, else a heuristic
/// lower bound.
fn stability(profile: &StrategyProfile, points: &PointSet, alpha: f64) -> Result<(f64, BetaKind)> {
    let opts = CertifyOptions {
        mode: Mode::Auto,
        gamma: GammaReference::Skip,
        ..CertifyOptions::default()
    };
    let c = certify_with(profile, points.distances(), alpha, &opts)?;
    Ok((c.beta, c.beta_kind))
}

/// Points `0, 1, q, q^2, ..., q^(n-1)` on the line with `q = 1 + 2/alpha`,
/// the star bought by the origin and the path where every point buys the
/// edge to its right neighbour.
#[derive(Clone, Debug)]
pub struct R1Chain {
    pub points: PointSet,
    pub star: StrategyProfile,
    pub path: StrategyProfile,
}

pub fn r1_chain(alpha: f64, n: usize) -> Result<R1Chain> {
    check_alpha(alpha)?;
    if n < 1 {
        return input("the chain needs n >= 1");
    }
    let q = 1.0 + 2.0 / alpha;
    let coords: Vec<Vec<f64>> = std::iter::once(0.0)
        .chain((1..=n).map(|i| q.powi(i as i32 - 1)))
        .map(|x| vec![x])
        .collect();
    let points = PointSet::from_coords(coords)?;
    let star = star_profile(n + 1, 0)?;
    let path = StrategyProfile::from_owned_edges(n + 1, (0..n).map(|i| (i, i + 1)));
    Ok(R1Chain { points, star, path })
}

/// Closed form of the star's social cost: `alpha (q^n - 1)(n + alpha/2)`.
pub fn r1_star_cost(alpha: f64, n: usize) -> f64 {
    let q = 1.0 + 2.0 / alpha;
    alpha * (q.powi(n as i32) - 1.0) * (n as f64 + alpha / 2.0)
}

/// Closed form of the path's social cost:
/// `alpha ((n - alpha) q^n + alpha + n + q^(n-1))`.
pub fn r1_path_cost(alpha: f64, n: usize) -> f64 {
    let q = 1.0 + 2.0 / alpha;
    let nf = n as f64;
    alpha * ((nf - alpha) * q.powi(n as i32) + alpha + nf + q.powi(n as i32 - 1))
}

/// Both sides of
/// `2n + sum_{i=1}^{n-1} (4/alpha) q^(i-1) (i+1)(n-i) = (alpha n - alpha^2) q^n + alpha^2 + alpha n`.
pub fn weird_sum_check(alpha: f64, n: usize) -> (f64, f64) {
    let q = 1.0 + 2.0 / alpha;
    let nf = n as f64;
    let lhs = 2.0 * nf
        + (1..n)
            .map(|i| 4.0 / alpha * q.powi(i as i32 - 1) * (i as f64 + 1.0) * (nf - i as f64))
            .sum::<f64>();
    let rhs = (alpha * nf - alpha * alpha) * q.powi(n as i32) + alpha * alpha + alpha * nf;
    (lhs, rhs)
}

#[derive(Clone, Debug, Serialize)]
pub struct R1PoaReport {
    pub alpha: f64,
    pub n: usize,
    /// Simulated `SC(star) / SC(path)`.
    pub ratio: f64,
    /// The same ratio from the closed forms.
    pub formula_ratio: f64,
    /// Exact `beta` of the star, when the instance is small enough.
    pub star_beta: Option<f64>,
}

/// Chain length used for a given `alpha`: nearest integer to `alpha^(2/3)`,
/// at least 4.
pub fn r1_chain_length(alpha: f64) -> usize {
    (alpha.powf(2.0 / 3.0).round() as usize).max(4)
}

pub fn r1_poa_ratio(alpha: f64) -> Result<R1PoaReport> {
    check_alpha(alpha)?;
    let n = r1_chain_length(alpha);
    let chain = r1_chain(alpha, n)?;
    let ratio = sc(&chain.star, &chain.points, alpha)? / sc(&chain.path, &chain.points, alpha)?;
    let star_beta = if n < EXHAUSTIVE_LIMIT {
        Some(stability(&chain.star, &chain.points, alpha)?.0)
    } else {
        None
    };
    Ok(R1PoaReport {
        alpha,
        n,
        ratio,
        formula_ratio: r1_star_cost(alpha, n) / r1_path_cost(alpha, n),
        star_beta,
    })
}

/// Last coordinate of the off-center point of the high-dimensional star.
pub fn dinfty_x(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha <= 2f64.sqrt() - 1.0 {
        return input(format!("alpha must exceed sqrt(2) - 1, got {alpha}"));
    }
    if alpha >= (1.0 + 2f64.sqrt()).sqrt() - 1.0 {
        Ok((alpha * alpha + 2.0 * alpha) / (2.0 * alpha + 2.0))
    } else {
        Ok(((alpha * alpha + 2.0 * alpha - 1.0) / 2.0).sqrt())
    }
}

/// `m` = origin (index 0), `u = x e_d` (index 1), then `+e_i, -e_i` for
/// `i < d`; the star centered at `u` and the one centered at `m`.
#[derive(Clone, Debug)]
pub struct DInftyStar {
    pub d: usize,
    pub alpha: f64,
    pub x: f64,
    pub points: PointSet,
    pub star_u: StrategyProfile,
    pub star_m: StrategyProfile,
    /// `SC(star_u) / SC(star_m)`.
    pub ratio: f64,
    /// Exact `beta` of `star_u` when `2d` is within the exhaustive limit.
    pub star_u_beta: Option<f64>,
}

pub const DINFTY_M: usize = 0;
pub const DINFTY_U: usize = 1;

pub fn dinfty_star(d: usize, alpha: f64) -> Result<DInftyStar> {
    dinfty_star_with(d, alpha, true)
}

/// As [`dinfty_star`], optionally skipping the equilibrium check.
pub fn dinfty_star_with(d: usize, alpha: f64, verify: bool) -> Result<DInftyStar> {
    if d < 2 {
        return input("dimension must be at least 2");
    }
    let x = dinfty_x(alpha)?;
    let mut coords = vec![vec![0.0; d]];
    let mut u = vec![0.0; d];
    u[d - 1] = x;
    coords.push(u);
    for i in 0..d - 1 {
        for sign in [1.0, -1.0] {
            let mut t = vec![0.0; d];
            t[i] = sign;
            coords.push(t);
        }
    }
    let points = PointSet::from_coords(coords)?;
    let n = points.len();
    let star_u = star_profile(n, DINFTY_U)?;
    let star_m = star_profile(n, DINFTY_M)?;
    let ratio = sc(&star_u, &points, alpha)? / sc(&star_m, &points, alpha)?;
    let star_u_beta = if verify && n <= EXHAUSTIVE_LIMIT {
        Some(stability(&star_u, &points, alpha)?.0)
    } else {
        None
    };
    Ok(DInftyStar {
        d,
        alpha,
        x,
        points,
        star_u,
        star_m,
        ratio,
        star_u_beta,
    })
}

/// `k` points per corner of the unit equilateral triangle. The corner point
/// is the cluster representative; the others sit on the ray pointing away
/// from the triangle at distances `eps, 2 eps, ...` and form a path towards
/// the representative. Returns the coordinates and the representatives.
fn triangle_cluster_points(k: usize, eps: f64) -> (Vec<Vec<f64>>, [usize; 3]) {
    let h = 3f64.sqrt() / 2.0;
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.5, h]];
    let center = [0.5, h / 3.0];
    let mut coords = Vec::with_capacity(3 * k);
    for c in corners {
        let (dx, dy) = (c[0] - center[0], c[1] - center[1]);
        let len = (dx * dx + dy * dy).sqrt();
        for s in 0..k {
            let r = s as f64 * eps / len;
            coords.push(vec![c[0] + r * dx, c[1] + r * dy]);
        }
    }
    (coords, [0, k, 2 * k])
}

/// Intra-cluster paths: member `s` buys the edge to member `s - 1`.
fn cluster_paths(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..3).flat_map(move |c| (1..k).map(move |s| (c * k + s, c * k + s - 1)))
}

#[derive(Clone, Debug)]
pub struct TriangleClusters {
    pub alpha: f64,
    pub epsilon: f64,
    pub cluster_size: usize,
    pub points: PointSet,
    pub representatives: [usize; 3],
    /// Cluster paths plus the three unit edges, each owned by a different
    /// representative.
    pub profile: StrategyProfile,
    /// `cost before / cost after` when representative 0 drops its unit edge.
    pub drop_factor: f64,
    /// The same factor in the co-location limit, `(alpha + 2k) / (3k)`.
    pub limit_factor: f64,
    /// `(4 k^2, alpha + 2 k^2)`: the three unit edges beat two iff lhs > rhs.
    pub optimality: (f64, f64),
}

pub fn triangle_clusters(alpha: f64, epsilon: f64) -> Result<TriangleClusters> {
    check_alpha(alpha)?;
    if alpha < 1.0 {
        return input(format!("alpha must be at least 1, got {alpha}"));
    }
    if !(epsilon > 0.0 && epsilon < 1e-2) {
        return input(format!("epsilon must lie in (0, 0.01), got {epsilon}"));
    }
    let k = (alpha.sqrt() + 1.0).floor() as usize;
    let (coords, reps) = triangle_cluster_points(k, epsilon);
    let points = PointSet::from_coords(coords)?;
    let n = 3 * k;
    let unit = [(reps[0], reps[1]), (reps[1], reps[2]), (reps[2], reps[0])];
    let profile = StrategyProfile::from_owned_edges(n, cluster_paths(k).chain(unit));
    let state = GameState::new(&profile, points.distances(), alpha)?;
    let before = state.cost(reps[0]);
    let after = heuristic_moves(&state, reps[0])
        .into_iter()
        .find(|m| m.mv == Move::Drop(reps[1]))
        .map(|m| m.cost)
        .expect("representative owns a unit edge");
    let kf = k as f64;
    Ok(TriangleClusters {
        alpha,
        epsilon,
        cluster_size: k,
        points,
        representatives: reps,
        profile,
        drop_factor: before / after,
        limit_factor: (alpha + 2.0 * kf) / (3.0 * kf),
        optimality: (4.0 * kf * kf, alpha + 2.0 * kf * kf),
    })
}

#[derive(Clone, Debug)]
pub struct PosInstance {
    pub alpha: f64,
    pub epsilon: f64,
    pub cluster_size: usize,
    pub points: PointSet,
    pub representatives: [usize; 3],
    /// All three unit edges, each owned by a different representative.
    pub three_edge: StrategyProfile,
    /// Two unit edges, both owned by the first representative.
    pub two_edge: StrategyProfile,
    pub sc_three: f64,
    pub sc_two: f64,
    pub beta_three: f64,
    pub beta_two: f64,
    pub beta_two_kind: BetaKind,
    /// `(4 k^2, alpha + 2 k^2)`: the three-edge network is cheaper iff lhs > rhs.
    pub optimality: (f64, f64),
    /// `(2k, alpha + k)`: selling a unit edge pays off iff lhs < rhs.
    pub selling: (f64, f64),
}

impl PosInstance {
    /// The cheaper three-edge network is unstable while the two-edge one is a
    /// NE, so every NE costs more than the optimum of the connector family.
    pub fn witnesses_pos_above_one(&self) -> bool {
        self.sc_two > self.sc_three && self.beta_three > 1.0 + crate::REL_TOL && self.beta_two <= 1.0 + crate::REL_TOL
    }
}

pub fn pos_instance(alpha: f64, epsilon: f64) -> Result<PosInstance> {
    check_alpha(alpha)?;
    if alpha <= 2.0 {
        return input(format!("alpha must exceed 2, got {alpha}"));
    }
    if !(epsilon > 0.0 && epsilon < 1e-2) {
        return input(format!("epsilon must lie in (0, 0.01), got {epsilon}"));
    }
    let k = alpha.ceil() as usize - 1;
    let (coords, reps) = triangle_cluster_points(k, epsilon);
    let points = PointSet::from_coords(coords)?;
    let n = 3 * k;
    let three_edge = StrategyProfile::from_owned_edges(
        n,
        cluster_paths(k).chain([(reps[0], reps[1]), (reps[1], reps[2]), (reps[2], reps[0])]),
    );
    let two_edge = StrategyProfile::from_owned_edges(n, cluster_paths(k).chain([(reps[0], reps[1]), (reps[0], reps[2])]));
    let sc_three = sc(&three_edge, &points, alpha)?;
    let sc_two = sc(&two_edge, &points, alpha)?;
    let (beta_three, _) = stability(&three_edge, &points, alpha)?;
    let (beta_two, beta_two_kind) = stability(&two_edge, &points, alpha)?;
    let kf = k as f64;
    Ok(PosInstance {
        alpha,
        epsilon,
        cluster_size: k,
        points,
        representatives: reps,
        three_edge,
        two_edge,
        sc_three,
        sc_two,
        beta_three,
        beta_two,
        beta_two_kind,
        optimality: (4.0 * kf * kf, alpha + 2.0 * kf * kf),
        selling: (2.0 * kf, alpha + kf),
    })
}
