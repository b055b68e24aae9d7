//! Round-robin improving-response dynamics with cycle detection.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{exact_best_response_limited, heuristic_moves, GameState, EXHAUSTIVE_LIMIT};
use crate::error::{Error, Result};
use crate::game::StrategyProfile;
use crate::geometry::{seeded_rng, DistMatrix, Point, PointSet};
use crate::IMPROVEMENT_EPS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// The mover switches to an exact best response.
    BestResponse,
    /// The mover takes the first improving local move.
    FirstImproving,
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best_response" | "best-response" => Ok(Policy::BestResponse),
            "first_improving" | "first-improving" => Ok(Policy::FirstImproving),
            _ => Err(Error::Input(format!("unknown policy {s:?} (best_response|first_improving)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsKind {
    Converged,
    Cycle,
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub agent: usize,
    pub strategy: Vec<usize>,
    pub cost_before: f64,
    pub cost_after: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DynamicsOutcome {
    pub kind: DynamicsKind,
    /// Executed moves, in order.
    pub moves: Vec<MoveRecord>,
    /// Number of moves between the two visits of the repeated profile.
    pub cycle_len: Option<usize>,
    pub final_profile: StrategyProfile,
    /// The profiles on the cycle, starting and ending with the repeated one.
    pub cycle: Vec<StrategyProfile>,
}

impl DynamicsOutcome {
    pub fn trajectory_len(&self) -> usize {
        self.moves.len()
    }
}

/// Runs the dynamics with an arbitrary mover. `mover(profile, agent)` returns
/// the agent's new strategy and its costs, or `None` when it stays put.
/// Halts after a full round without moves, when a profile repeats, or after
/// `max_steps` moves.
pub fn run_dynamics_with(
    profile0: &StrategyProfile,
    order: &[usize],
    max_steps: usize,
    mover: &mut dyn FnMut(&StrategyProfile, usize) -> Result<Option<MoveRecord>>,
) -> Result<DynamicsOutcome> {
    if order.is_empty() {
        return crate::error::input("agent order is empty");
    }
    if let Some(&a) = order.iter().find(|&&a| a >= profile0.n()) {
        return crate::error::input(format!("agent {a} out of range"));
    }
    let mut profile = profile0.canonical();
    let mut history: Vec<StrategyProfile> = vec![profile.clone()];
    let mut seen: HashMap<StrategyProfile, usize> = HashMap::from([(profile.clone(), 0)]);
    let mut moves = Vec::new();
    let mut idle = 0;
    let mut turn = 0;
    loop {
        if idle == order.len() {
            return Ok(DynamicsOutcome {
                kind: DynamicsKind::Converged,
                moves,
                cycle_len: None,
                final_profile: profile,
                cycle: Vec::new(),
            });
        }
        if moves.len() >= max_steps {
            return Ok(DynamicsOutcome {
                kind: DynamicsKind::StepLimit,
                moves,
                cycle_len: None,
                final_profile: profile,
                cycle: Vec::new(),
            });
        }
        let agent = order[turn % order.len()];
        turn += 1;
        match mover(&profile, agent)? {
            None => idle += 1,
            Some(rec) => {
                idle = 0;
                profile.set_strategy(agent, rec.strategy.clone());
                moves.push(rec);
                if let Some(&first) = seen.get(&profile) {
                    let cycle = history[first..].iter().cloned().chain([profile.clone()]).collect();
                    return Ok(DynamicsOutcome {
                        kind: DynamicsKind::Cycle,
                        cycle_len: Some(moves.len() - first),
                        moves,
                        final_profile: profile,
                        cycle,
                    });
                }
                seen.insert(profile.clone(), history.len());
                history.push(profile.clone());
            }
        }
    }
}

/// Mover that switches to the exact best response when it improves by more
/// than the tolerance.
pub fn best_response_mover<'a>(
    weights: &'a DistMatrix,
    alpha: f64,
) -> impl FnMut(&StrategyProfile, usize) -> Result<Option<MoveRecord>> + 'a {
    move |p: &StrategyProfile, u: usize| {
        let st = GameState::new(p, weights, alpha)?;
        let br = exact_best_response_limited(&st, u, EXHAUSTIVE_LIMIT)?;
        Ok((br.cost < br.current_cost - IMPROVEMENT_EPS).then_some(MoveRecord {
            agent: u,
            strategy: br.strategy,
            cost_before: br.current_cost,
            cost_after: br.cost,
        }))
    }
}

/// Mover that applies the first improving local move.
pub fn first_improving_mover<'a>(
    weights: &'a DistMatrix,
    alpha: f64,
) -> impl FnMut(&StrategyProfile, usize) -> Result<Option<MoveRecord>> + 'a {
    move |p: &StrategyProfile, u: usize| {
        let st = GameState::new(p, weights, alpha)?;
        let current = st.cost(u);
        Ok(heuristic_moves(&st, u)
            .into_iter()
            .find(|m| m.cost < current - IMPROVEMENT_EPS)
            .map(|m| MoveRecord {
                agent: u,
                strategy: m.mv.apply(p.strategy(u)),
                cost_before: current,
                cost_after: m.cost,
            }))
    }
}

/// Round-robin dynamics over `order` (all agents ascending when `None`).
pub fn run_dynamics(
    profile0: &StrategyProfile,
    weights: &DistMatrix,
    alpha: f64,
    policy: Policy,
    order: Option<&[usize]>,
    max_steps: usize,
) -> Result<DynamicsOutcome> {
    let n = profile0.n();
    if policy == Policy::BestResponse && n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let default: Vec<usize> = (0..n).collect();
    let order = order.unwrap_or(&default);
    match policy {
        Policy::BestResponse => run_dynamics_with(profile0, order, max_steps, &mut best_response_mover(weights, alpha)),
        Policy::FirstImproving => {
            run_dynamics_with(profile0, order, max_steps, &mut first_improving_mover(weights, alpha))
        }
    }
}

/// A best-response cycle found by [`search_cycles`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleWitness {
    pub seed: u64,
    pub points: Vec<Point>,
    pub start: StrategyProfile,
    pub cycle: Vec<StrategyProfile>,
}

/// Best-response dynamics on random instances: `n` uniform points in the unit
/// square and a random start profile per seed. Returns every cycle found and
/// the number of runs that converged.
pub fn search_cycles(
    seeds: std::ops::Range<u64>,
    n: usize,
    alpha: f64,
    max_steps: usize,
) -> Result<(Vec<CycleWitness>, usize)> {
    let mut found = Vec::new();
    let mut converged = 0;
    for seed in seeds {
        let pts = crate::geometry::random_unit_square(n, seed);
        let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
        let start = StrategyProfile::from_owned_edges(
            n,
            (0..n)
                .flat_map(|u| (0..n).map(move |v| (u, v)))
                .filter(|&(u, v)| u != v)
                .filter(|_| rng.gen::<f64>() < 0.3)
                .collect::<Vec<_>>(),
        );
        let out = run_dynamics(&start, pts.distances(), alpha, Policy::BestResponse, None, max_steps)?;
        match out.kind {
            DynamicsKind::Cycle => found.push(CycleWitness {
                seed,
                points: pts.points().to_vec(),
                start,
                cycle: out.cycle,
            }),
            DynamicsKind::Converged => converged += 1,
            DynamicsKind::StepLimit => {}
        }
    }
    Ok((found, converged))
}

impl CycleWitness {
    pub fn point_set(&self) -> Result<PointSet> {
        PointSet::new(self.points.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designer::star_profile;
    use crate::equilibrium::{certify, Mode};
    use crate::geometry::random_unit_square;

    #[test]
    fn two_points_converge_to_one_edge() {
        let pts = PointSet::from_coords(vec![vec![0.0], vec![1.0]]).unwrap();
        for alpha in [0.1, 1.0, 50.0] {
            for policy in [Policy::BestResponse, Policy::FirstImproving] {
                let out = run_dynamics(&StrategyProfile::empty(2), pts.distances(), alpha, policy, None, 100).unwrap();
                assert_eq!(out.kind, DynamicsKind::Converged);
                assert_eq!(out.final_profile.edge_count(), 1);
                assert!(!out.final_profile.has_double_buy());
                assert_eq!(out.moves.len(), 1);
            }
        }
    }

    #[test]
    fn ne_start_converges_immediately() {
        let pts = PointSet::from_coords(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let s = star_profile(3, 1).unwrap();
        let out = run_dynamics(&s, pts.distances(), 2.0, Policy::BestResponse, None, 100).unwrap();
        assert_eq!(out.kind, DynamicsKind::Converged);
        assert!(out.moves.is_empty());
        assert_eq!(out.final_profile, s);
    }

    #[test]
    fn forced_cycle_is_detected() {
        // agent 0 toggles its edge forever while agent 1 never moves
        let p0 = StrategyProfile::empty(2);
        let mut mover = |p: &StrategyProfile, u: usize| -> Result<Option<MoveRecord>> {
            Ok((u == 0).then(|| MoveRecord {
                agent: 0,
                strategy: if p.strategy(0).is_empty() { vec![1] } else { vec![] },
                cost_before: 2.0,
                cost_after: 1.0,
            }))
        };
        let out = run_dynamics_with(&p0, &[0, 1], 100, &mut mover).unwrap();
        assert_eq!(out.kind, DynamicsKind::Cycle);
        assert_eq!(out.cycle_len, Some(2));
        assert_eq!(out.cycle.first(), out.cycle.last());
        assert_eq!(out.cycle.len(), 3);
    }

    #[test]
    fn step_limit_is_reported() {
        let mut k = 0usize;
        let mut mover = |_: &StrategyProfile, _: usize| -> Result<Option<MoveRecord>> {
            k += 1;
            // a fresh profile every time: agent 0 walks through targets of a big instance
            Ok(Some(MoveRecord {
                agent: 0,
                strategy: vec![1 + k % 9],
                cost_before: 1.0,
                cost_after: 0.5,
            }))
        };
        let out = run_dynamics_with(&StrategyProfile::empty(10), &[0], 5, &mut mover).unwrap();
        assert_eq!(out.kind, DynamicsKind::StepLimit);
        assert_eq!(out.moves.len(), 5);
    }

    #[test]
    fn converged_profiles_are_exact_ne_and_moves_improve() {
        for seed in 0..12 {
            let n = 4 + (seed as usize % 4);
            let pts = random_unit_square(n, seed);
            let out = run_dynamics(&StrategyProfile::empty(n), pts.distances(), 1.5, Policy::BestResponse, None, 500).unwrap();
            for m in &out.moves {
                assert!(m.cost_after < m.cost_before - IMPROVEMENT_EPS);
            }
            if out.kind == DynamicsKind::Converged {
                let c = certify(&out.final_profile, pts.distances(), 1.5, Mode::Exact).unwrap();
                assert!((c.beta - 1.0).abs() <= 1e-9, "seed {seed}: {}", c.beta);
            }
        }
    }

    #[test]
    fn first_improving_moves_improve() {
        for seed in 0..6 {
            let pts = random_unit_square(9, seed);
            let out = run_dynamics(&StrategyProfile::empty(9), pts.distances(), 0.7, Policy::FirstImproving, None, 300).unwrap();
            for m in &out.moves {
                assert!(m.cost_after < m.cost_before - IMPROVEMENT_EPS);
            }
        }
    }

    #[test]
    fn best_response_refuses_large_instances() {
        let pts = random_unit_square(17, 0);
        let r = run_dynamics(&StrategyProfile::empty(17), pts.distances(), 1.0, Policy::BestResponse, None, 10);
        assert!(matches!(r, Err(Error::TooLarge { .. })));
    }
}
