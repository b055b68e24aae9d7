//! Best-response oracles: exhaustive search and cheap local moves.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{Deviation, GameState, EXHAUSTIVE_LIMIT};
use crate::error::{Error, Result};
use crate::game::dijkstra_into;
use crate::IMPROVEMENT_EPS;

/// Globally optimal strategy of `u` with everyone else fixed. Among optimal
/// strategies the lexicographically smallest sorted target list wins.
pub fn exact_best_response(state: &GameState, u: usize) -> Result<Deviation> {
    exact_best_response_limited(state, u, EXHAUSTIVE_LIMIT)
}

pub fn exact_best_response_limited(state: &GameState, u: usize, limit: usize) -> Result<Deviation> {
    let n = state.n();
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    let w = state.weights;
    let adj = state.network.adjacency();

    // Every path leaving u starts with one of its edges and then never returns
    // to u, so distances in the network without u are all that is needed.
    let mut fixed = vec![false; n];
    for &f in state.incoming(u) {
        fixed[f] = true;
    }
    let mut row = vec![0.0; n];
    let mut base = vec![f64::INFINITY; n];
    base[u] = 0.0;
    let mut vias: Vec<Vec<f64>> = Vec::new();
    let mut cands: Vec<usize> = Vec::new();
    for s in 0..n {
        if s == u || !(fixed[s] || w.get(u, s).is_finite()) {
            continue;
        }
        dijkstra_into(adj, s, &mut row, |a, b| a != u && b != u);
        let l = w.get(u, s);
        let via: Vec<f64> = row.iter().map(|d| l + d).collect();
        if fixed[s] {
            // already linked for free; buying the same edge again only costs
            for (b, v) in base.iter_mut().zip(&via) {
                *b = b.min(*v);
            }
        } else {
            cands.push(s);
            vias.push(via);
        }
    }
    base[u] = 0.0;
    for via in &mut vias {
        via[u] = 0.0;
    }

    let mut floor = base.clone();
    for via in &vias {
        for (f, v) in floor.iter_mut().zip(via) {
            *f = f.min(*v);
        }
    }
    let floor_sum: f64 = floor.iter().sum();

    let mut search = Search {
        alpha: state.alpha,
        cand_len: cands.iter().map(|&c| w.get(u, c)).collect(),
        vias: &vias,
        floor_sum,
        best_cost: base.iter().sum(),
        best: Vec::new(),
        current: Vec::new(),
        bufs: vec![vec![0.0; n]; cands.len() + 1],
    };
    search.bufs[0].copy_from_slice(&base);
    search.visit(0, 0, 0.0);
    Ok(Deviation {
        agent: u,
        strategy: search.best.iter().map(|&i| cands[i]).collect(),
        cost: search.best_cost,
        current_cost: state.cost(u),
    })
}

struct Search<'a> {
    alpha: f64,
    cand_len: Vec<f64>,
    vias: &'a [Vec<f64>],
    floor_sum: f64,
    best_cost: f64,
    best: Vec<usize>,
    current: Vec<usize>,
    bufs: Vec<Vec<f64>>,
}

impl Search<'_> {
    /// Pre-order walk: every extension of `current` by a candidate index
    /// `>= start`, visited in lexicographic order.
    fn visit(&mut self, depth: usize, start: usize, edge_len: f64) {
        for i in start..self.vias.len() {
            let len = edge_len + self.cand_len[i];
            let edge_cost = self.alpha * len;
            // nothing below can beat the incumbent
            if edge_cost + self.floor_sum >= self.best_cost - IMPROVEMENT_EPS {
                continue;
            }
            let (lo, hi) = self.bufs.split_at_mut(depth + 1);
            let (prev, next) = (&lo[depth], &mut hi[0]);
            let mut sum = 0.0;
            for ((nx, &p), &v) in next.iter_mut().zip(prev).zip(&self.vias[i]) {
                *nx = p.min(v);
                sum += *nx;
            }
            self.current.push(i);
            let cost = edge_cost + sum;
            if cost < self.best_cost - IMPROVEMENT_EPS {
                self.best_cost = cost;
                self.best.clone_from(&self.current);
            }
            self.visit(depth + 1, i + 1, len);
            self.current.pop();
        }
    }
}

/// A local change of one agent's strategy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Drop(usize),
    DropAll,
    Add(usize),
    Swap { drop: usize, add: usize },
    /// Greedy additions on top of the current strategy, in order.
    AddMany(Vec<usize>),
}

impl Move {
    pub fn apply(&self, strategy: &[usize]) -> Vec<usize> {
        let mut s: Vec<usize> = match self {
            Move::Drop(v) => strategy.iter().copied().filter(|x| x != v).collect(),
            Move::DropAll => Vec::new(),
            Move::Add(w) => strategy.iter().copied().chain([*w]).collect(),
            Move::Swap { drop, add } => strategy
                .iter()
                .copied()
                .filter(|x| x != drop)
                .chain([*add])
                .collect(),
            Move::AddMany(ws) => strategy.iter().copied().chain(ws.iter().copied()).collect(),
        };
        s.sort_unstable();
        s.dedup();
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredMove {
    pub mv: Move,
    /// Exact cost of the agent after the move.
    pub cost: f64,
}

/// Swap targets screened per dropped edge when `n` is large.
const SWAP_SCREEN: usize = 32;
/// Up to this size every target is screened for swaps.
const SWAP_FULL_SCREEN_N: usize = 256;
/// Exact swap evaluations per dropped edge.
const SWAP_EXACT_EVALS: usize = 16;

/// Cap on greedy additions in one move.
const GREEDY_MAX_ADDS: usize = 32;

/// `sum_x min(a[x], shift + b[x])`, written for auto-vectorization.
fn sum_min_shift(a: &[f64], b: &[f64], shift: f64) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let (ra, rb) = (chunks_a.remainder(), chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..8 {
            acc[k] += ca[k].min(shift + cb[k]);
        }
    }
    let mut s: f64 = acc.iter().sum();
    for (x, y) in ra.iter().zip(rb) {
        s += x.min(shift + y);
    }
    s
}

/// Heap entry for lazy greedy: larger gain first, then smaller index.
#[derive(Clone, Copy, PartialEq)]
struct Gain {
    gain: f64,
    t: usize,
}

impl Eq for Gain {}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.total_cmp(&other.gain).then(other.t.cmp(&self.t))
    }
}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance total ordered by (unreachable count, finite sum).
fn reach_key(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut inf = 0;
    let mut sum = 0.0;
    for v in values {
        if v.is_finite() {
            sum += v;
        } else {
            inf += 1;
        }
    }
    (inf, sum)
}

fn key_to_cost(key: (usize, f64)) -> f64 {
    if key.0 > 0 {
        f64::INFINITY
    } else {
        key.1
    }
}

/// Drop-one, drop-all, add-one, swap-one and greedy multi-add moves of `u`,
/// each with its exact resulting cost, in a fixed order.
pub fn heuristic_moves(state: &GameState, u: usize) -> Vec<ScoredMove> {
    let n = state.n();
    let w = state.weights;
    let alpha = state.alpha;
    let adj = state.network.adjacency();
    let d = &state.dist;
    let du = d.row(u);
    let own = state.owned_len(u);
    let strategy = state.profile.strategy(u);
    let incoming = state.incoming(u);
    let mut out = Vec::new();
    let mut buf = vec![0.0; n];

    // distances from u with edge (u, v) removed; unchanged if v also bought it
    let dist_without = |v: usize, buf: &mut Vec<f64>| {
        if incoming.contains(&v) {
            buf.copy_from_slice(du);
        } else {
            dijkstra_into(adj, u, buf, |a, b| !((a == u && b == v) || (a == v && b == u)));
        }
    };

    let mut drop_rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(strategy.len());
    for &v in strategy {
        dist_without(v, &mut buf);
        let cost = alpha * (own - w.get(u, v)) + buf.iter().sum::<f64>();
        out.push(ScoredMove { mv: Move::Drop(v), cost });
        drop_rows.push((v, buf.clone()));
    }

    if strategy.len() > 1 {
        dijkstra_into(adj, u, &mut buf, |a, b| {
            let other = if a == u { b } else if b == u { a } else { return true };
            !strategy.contains(&other) || incoming.contains(&other)
        });
        out.push(ScoredMove {
            mv: Move::DropAll,
            cost: buf.iter().sum::<f64>(),
        });
    }

    let mut owned = vec![false; n];
    strategy.iter().for_each(|&v| owned[v] = true);
    owned[u] = true;
    let targets: Vec<usize> = (0..n).filter(|&x| !owned[x] && w.get(u, x).is_finite()).collect();
    let connected = du.iter().all(|x| x.is_finite());

    let add_dist = |base: &[f64], t: usize| -> (usize, f64) {
        let l = w.get(u, t);
        if connected {
            (0, sum_min_shift(base, d.row(t), l))
        } else {
            reach_key(base.iter().zip(d.row(t)).map(|(&a, &b)| a.min(l + b)))
        }
    };

    let mut best_add: Option<(usize, (usize, f64))> = None;
    let mut first_totals = Vec::with_capacity(targets.len());
    for &t in &targets {
        let key = add_dist(du, t);
        let total = (key.0, key.1 + alpha * (own + w.get(u, t)));
        first_totals.push(total.1);
        out.push(ScoredMove {
            mv: Move::Add(t),
            cost: alpha * (own + w.get(u, t)) + key_to_cost(key),
        });
        if best_add.is_none_or(|(_, b)| total < b) {
            best_add = Some((t, total));
        }
    }

    // swaps that cannot beat the current cost or an earlier move are skipped
    let mut threshold = out.iter().map(|m| m.cost).fold(state.cost(u), f64::min);
    for (v, d1) in &drop_rows {
        let lv = w.get(u, *v);
        let d1_finite = d1.iter().all(|x| x.is_finite());
        let pool: Vec<usize> = if n <= SWAP_FULL_SCREEN_N {
            targets.clone()
        } else {
            let mut near = targets.clone();
            let k = SWAP_SCREEN.min(near.len());
            if k > 0 {
                near.select_nth_unstable_by(k - 1, |&a, &b| w.get(u, a).total_cmp(&w.get(u, b)).then(a.cmp(&b)));
                near.truncate(k);
                near.sort_unstable();
            }
            near
        };
        // d(w, .) only grows when (u, v) disappears, so this under-estimates
        let mut screened: Vec<(f64, usize)> = pool
            .iter()
            .map(|&t| {
                let lt = w.get(u, t);
                let rest = if d1_finite {
                    sum_min_shift(d1, d.row(t), lt)
                } else {
                    key_to_cost(reach_key(d1.iter().zip(d.row(t)).map(|(&a, &b)| a.min(lt + b))))
                };
                (alpha * (own - lv + lt) + rest, t)
            })
            .collect();
        screened.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let double = incoming.contains(v);
        let mut best: Option<(f64, usize)> = None;
        for &(lb, t) in screened.iter().take(SWAP_EXACT_EVALS) {
            if lb >= threshold - IMPROVEMENT_EPS || best.is_some_and(|(c, _)| lb >= c) {
                break;
            }
            let lt = w.get(u, t);
            let exact = if double {
                lb
            } else {
                let v = *v;
                dijkstra_into(adj, t, &mut buf, |a, b| !((a == u && b == v) || (a == v && b == u)));
                let key = reach_key(d1.iter().zip(&buf).map(|(&a, &b)| a.min(lt + b)));
                alpha * (own - lv + lt) + key_to_cost(key)
            };
            if best.is_none_or(|(c, _)| exact < c) {
                best = Some((exact, t));
            }
        }
        if let Some((cost, t)) = best {
            threshold = threshold.min(cost);
            out.push(ScoredMove {
                mv: Move::Swap { drop: *v, add: t },
                cost,
            });
        }
    }

    // greedy additions, continuing from the best single addition
    let current_key = (du.iter().filter(|x| !x.is_finite()).count(), alpha * own + du.iter().filter(|x| x.is_finite()).sum::<f64>());
    if let Some((t0, k0)) = best_add {
        if k0.0 < current_key.0 || (k0.0 == current_key.0 && k0.1 < current_key.1 - IMPROVEMENT_EPS) {
            let mut added = vec![t0];
            let mut cur: Vec<f64> = du.iter().zip(d.row(t0)).map(|(&a, &b)| a.min(w.get(u, t0) + b)).collect();
            let mut cur_len = own + w.get(u, t0);
            let mut cur_key = k0;
            let mut used = owned.clone();
            used[t0] = true;
            // gains only shrink as distances drop, so stale gains are upper
            // bounds and a lazily refreshed heap picks the same target
            let mut heap: BinaryHeap<Gain> = BinaryHeap::new();
            if connected {
                let base = alpha * own + du.iter().sum::<f64>();
                heap.extend(
                    targets
                        .iter()
                        .zip(&first_totals)
                        .filter(|&(&t, _)| t != t0)
                        .map(|(&t, &total)| Gain { gain: base - total, t }),
                );
            }
            while connected && added.len() < GREEDY_MAX_ADDS {
                let now = alpha * cur_len + cur.iter().sum::<f64>();
                let mut chosen = None;
                while let Some(top) = heap.pop() {
                    let l = w.get(u, top.t);
                    let total = sum_min_shift(&cur, d.row(top.t), l) + alpha * (cur_len + l);
                    let fresh = Gain { gain: now - total, t: top.t };
                    if heap.peek().is_none_or(|next| fresh >= *next) {
                        chosen = Some((fresh, total));
                        break;
                    }
                    heap.push(fresh);
                }
                match chosen {
                    Some((g, total)) if total < cur_key.1 - IMPROVEMENT_EPS => {
                        let l = w.get(u, g.t);
                        for (c, &b) in cur.iter_mut().zip(d.row(g.t)) {
                            *c = c.min(l + b);
                        }
                        cur_len += l;
                        cur_key = (0, total);
                        added.push(g.t);
                    }
                    _ => break,
                }
            }
            while !connected && added.len() < GREEDY_MAX_ADDS {
                let mut step: Option<(usize, (usize, f64))> = None;
                for &t in &targets {
                    if used[t] {
                        continue;
                    }
                    let l = w.get(u, t);
                    let key = add_dist(&cur, t);
                    let total = (key.0, key.1 + alpha * (cur_len + l));
                    if step.is_none_or(|(_, b)| total < b) {
                        step = Some((t, total));
                    }
                }
                match step {
                    Some((t, k)) if k.0 < cur_key.0 || (k.0 == cur_key.0 && k.1 < cur_key.1 - IMPROVEMENT_EPS) => {
                        let l = w.get(u, t);
                        for (c, &b) in cur.iter_mut().zip(d.row(t)) {
                            *c = c.min(l + b);
                        }
                        cur_len += l;
                        cur_key = k;
                        used[t] = true;
                        added.push(t);
                    }
                    _ => break,
                }
            }
            if added.len() > 1 {
                out.push(ScoredMove {
                    mv: Move::AddMany(added),
                    cost: if cur_key.0 > 0 { f64::INFINITY } else { cur_key.1 },
                });
            }
        }
    }
    out
}

/// Cheapest strategy among the local moves (or the current one). Its cost is
/// achievable, so it upper-bounds the best-response cost.
pub fn heuristic_deviations(state: &GameState, u: usize) -> Deviation {
    let current_cost = state.cost(u);
    let mut best_cost = current_cost;
    let mut best_strategy = state.profile.strategy(u).to_vec();
    for m in heuristic_moves(state, u) {
        if m.cost < best_cost - IMPROVEMENT_EPS {
            best_cost = m.cost;
            best_strategy = m.mv.apply(state.profile.strategy(u));
        }
    }
    Deviation {
        agent: u,
        strategy: best_strategy,
        cost: best_cost,
        current_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designer::{clique_profile, mst_profile, star_profile};
    use crate::game::{cost_report, Network, StrategyProfile};
    use crate::geometry::{random_unit_square, seeded_rng, DistMatrix, PointSet};
    use proptest::prelude::*;
    use rand::Rng;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_coords(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    /// Rebuilds the whole network for every subset of targets.
    fn naive_best_response(p: &StrategyProfile, weights: &DistMatrix, alpha: f64, u: usize) -> (Vec<usize>, f64) {
        let n = p.n();
        let others: Vec<usize> = (0..n).filter(|&v| v != u).collect();
        let mut best = (Vec::new(), f64::INFINITY);
        for mask in 0u32..(1 << others.len()) {
            let s: Vec<usize> = (0..others.len()).filter(|&i| mask >> i & 1 == 1).map(|i| others[i]).collect();
            let mut q = p.clone();
            q.set_strategy(u, s.clone());
            let net = Network::build(&q, weights).unwrap();
            let c = cost_report(&q, &net, alpha).total[u];
            if c < best.1 - 1e-12 || (c <= best.1 + 1e-12 && s < best.0) {
                best = (s, c);
            }
        }
        best
    }

    fn single_cost(p: &StrategyProfile, weights: &DistMatrix, alpha: f64, u: usize) -> f64 {
        let net = Network::build(p, weights).unwrap();
        cost_report(p, &net, alpha).total[u]
    }

    fn random_profile(n: usize, seed: u64, density: f64) -> StrategyProfile {
        let mut rng = seeded_rng(seed);
        let mut p = StrategyProfile::empty(n);
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.gen::<f64>() < density {
                    p.strategies[u].push(v);
                }
            }
        }
        p.canonical()
    }

    #[test]
    fn collinear_clique_agent_keeps_one_edge() {
        let pts = line(&[0.0, 1.0, 2.0]);
        let st = GameState::new(&clique_profile(3), pts.distances(), 3.0).unwrap();
        let br = exact_best_response(&st, 0).unwrap();
        assert_eq!(br.strategy, vec![1]);
        assert!((br.cost - 6.0).abs() < 1e-12);
        assert!((br.current_cost - 12.0).abs() < 1e-12);
        let h = heuristic_deviations(&st, 0);
        assert!((h.cost - 6.0).abs() < 1e-12);
        assert_eq!(h.strategy, vec![1]);
    }

    #[test]
    fn free_rider_keeps_nothing() {
        let pts = random_unit_square(6, 3);
        let mut p = clique_profile(6);
        // everybody else links to agent 5 already
        p.set_strategy(5, vec![]);
        let st = GameState::new(&p, pts.distances(), 1.0).unwrap();
        let br = exact_best_response(&st, 5).unwrap();
        assert!(br.strategy.is_empty());
    }

    #[test]
    fn isolated_agent_must_buy() {
        let pts = random_unit_square(6, 4);
        let mut p = star_profile(6, 0).unwrap();
        p.set_strategy(0, vec![1, 2, 3, 4]);
        let st = GameState::new(&p, pts.distances(), 2.0).unwrap();
        assert!(st.cost(5).is_infinite());
        let br = exact_best_response(&st, 5).unwrap();
        assert!(!br.strategy.is_empty());
        assert!(br.cost.is_finite());
        let h = heuristic_deviations(&st, 5);
        assert!(h.cost.is_finite());
    }

    #[test]
    fn refuses_above_limit() {
        let pts = random_unit_square(17, 0);
        let st = GameState::new(&mst_profile(&pts), pts.distances(), 1.0).unwrap();
        assert!(matches!(exact_best_response(&st, 0), Err(Error::TooLarge { .. })));
        assert!(exact_best_response_limited(&st, 0, 17).is_ok());
    }

    #[test]
    fn moves_apply() {
        let s = [1, 4, 7];
        assert_eq!(Move::Drop(4).apply(&s), vec![1, 7]);
        assert_eq!(Move::DropAll.apply(&s), Vec::<usize>::new());
        assert_eq!(Move::Add(2).apply(&s), vec![1, 2, 4, 7]);
        assert_eq!(Move::Swap { drop: 1, add: 9 }.apply(&s), vec![4, 7, 9]);
        assert_eq!(Move::AddMany(vec![8, 0]).apply(&s), vec![0, 1, 4, 7, 8]);
    }

    /// Greedy additions by full recomputation: repeatedly add the target with
    /// the smallest resulting cost while it improves.
    fn plain_greedy(p: &StrategyProfile, weights: &DistMatrix, alpha: f64, u: usize) -> Vec<usize> {
        let mut q = p.clone();
        let mut added = Vec::new();
        let mut cur = single_cost(&q, weights, alpha, u);
        loop {
            let mut best: Option<(f64, usize)> = None;
            for t in 0..p.n() {
                if t == u || q.strategy(u).contains(&t) {
                    continue;
                }
                let mut r = q.clone();
                let mut s = r.strategy(u).to_vec();
                s.push(t);
                r.set_strategy(u, s);
                let c = single_cost(&r, weights, alpha, u);
                if best.is_none_or(|(b, _)| c < b) {
                    best = Some((c, t));
                }
            }
            match best {
                Some((c, t)) if c < cur - 1e-9 && added.len() < GREEDY_MAX_ADDS => {
                    let mut s = q.strategy(u).to_vec();
                    s.push(t);
                    q.set_strategy(u, s);
                    added.push(t);
                    cur = c;
                }
                _ => return added,
            }
        }
    }

    #[test]
    fn lazy_greedy_matches_plain_greedy() {
        let mut checked = 0;
        for seed in 0..40 {
            let n = 20 + (seed as usize % 20);
            let pts = random_unit_square(n, 700 + seed);
            let p = mst_profile(&pts);
            let alpha = 0.05 + 0.1 * (seed % 5) as f64;
            let st = GameState::new(&p, pts.distances(), alpha).unwrap();
            for u in (0..n).step_by(3) {
                let lazy = heuristic_moves(&st, u)
                    .into_iter()
                    .find_map(|m| match m.mv {
                        Move::AddMany(v) => Some(v),
                        _ => None,
                    });
                let plain = plain_greedy(&p, pts.distances(), alpha, u);
                if plain.len() > 1 {
                    assert_eq!(lazy.as_ref(), Some(&plain), "seed {seed} agent {u}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 20, "only {checked} multi-add cases");
    }

    #[test]
    fn vectorized_sum_matches_plain() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.7).sin().abs()).collect();
        let b: Vec<f64> = (0..37).map(|i| (i as f64 * 1.3).cos().abs()).collect();
        let plain: f64 = a.iter().zip(&b).map(|(x, y)| x.min(0.2 + y)).sum();
        assert!((sum_min_shift(&a, &b, 0.2) - plain).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_matches_naive_enumeration(seed in 0u64..10_000, n in 2usize..7, alpha in 0.1f64..6.0) {
            let pts = random_unit_square(n, seed);
            let p = random_profile(n, seed ^ 5, 0.3);
            let st = GameState::new(&p, pts.distances(), alpha).unwrap();
            for u in 0..n {
                let br = exact_best_response(&st, u).unwrap();
                let (s, c) = naive_best_response(&p, pts.distances(), alpha, u);
                prop_assert!((br.cost - c).abs() <= 1e-9 * c.max(1.0), "u {} {} vs {}", u, br.cost, c);
                prop_assert_eq!(&br.strategy, &s);
                let mut q = p.clone();
                q.set_strategy(u, br.strategy.clone());
                prop_assert!((single_cost(&q, pts.distances(), alpha, u) - br.cost).abs() <= 1e-9 * c.max(1.0));
            }
        }

        #[test]
        fn exact_dominates_heuristic(seed in 0u64..10_000, n in 2usize..11, alpha in 0.1f64..8.0, density in 0.05f64..0.5) {
            let pts = random_unit_square(n, seed);
            let p = random_profile(n, seed ^ 11, density);
            let st = GameState::new(&p, pts.distances(), alpha).unwrap();
            for u in 0..n {
                let ex = exact_best_response(&st, u).unwrap();
                let h = heuristic_deviations(&st, u);
                prop_assert!(ex.cost <= h.cost + 1e-9 * h.cost.max(1.0));
                prop_assert!(h.cost <= h.current_cost);
            }
        }

        #[test]
        fn heuristic_costs_are_achievable(seed in 0u64..10_000, n in 2usize..10, alpha in 0.1f64..8.0) {
            let pts = random_unit_square(n, seed);
            let p = random_profile(n, seed ^ 3, 0.25);
            let st = GameState::new(&p, pts.distances(), alpha).unwrap();
            for u in 0..n {
                for m in heuristic_moves(&st, u) {
                    let mut q = p.clone();
                    q.set_strategy(u, m.mv.apply(p.strategy(u)));
                    let real = single_cost(&q, pts.distances(), alpha, u);
                    prop_assert!(real == m.cost || (real - m.cost).abs() <= 1e-9 * real.max(1.0),
                        "{:?}: claimed {} real {}", m.mv, m.cost, real);
                }
            }
        }
    }
}
