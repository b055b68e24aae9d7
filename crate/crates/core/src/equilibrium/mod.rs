//! Stability and efficiency audits: best responses, certificates, the star
//! threshold and improving-response dynamics.

mod dynamics;
mod optimum;
mod oracle;

pub use dynamics::{
    best_response_mover, first_improving_mover, run_dynamics, run_dynamics_with, search_cycles, CycleWitness,
    DynamicsKind, DynamicsOutcome, MoveRecord, Policy,
};
pub use optimum::{brute_force_optimum, mst_weight, optimum_lower_bound, Optimum, OPTIMUM_LIMIT};
pub use oracle::{exact_best_response, exact_best_response_limited, heuristic_deviations, heuristic_moves, Move, ScoredMove};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{all_pairs_distances_with, Network, StrategyProfile};
use crate::geometry::DistMatrix;
use crate::par::{self, Exec};

/// Default size limit for exhaustive best responses.
pub const EXHAUSTIVE_LIMIT: usize = 16;

/// A profile together with its network, all-pairs distances and per-agent data
/// needed by the oracles.
#[derive(Clone, Debug)]
pub struct GameState<'a> {
    pub weights: &'a DistMatrix,
    pub alpha: f64,
    pub profile: StrategyProfile,
    pub network: Network,
    pub dist: DistMatrix,
    owned_len: Vec<f64>,
    /// `incoming[u]`: agents that bought an edge to `u`.
    incoming: Vec<Vec<usize>>,
}

impl<'a> GameState<'a> {
    pub fn new(profile: &StrategyProfile, weights: &'a DistMatrix, alpha: f64) -> Result<Self> {
        Self::with_exec(profile, weights, alpha, Exec::default())
    }

    pub fn with_exec(profile: &StrategyProfile, weights: &'a DistMatrix, alpha: f64, exec: Exec) -> Result<Self> {
        let network = Network::build(profile, weights)?;
        let dist = all_pairs_distances_with(&network, exec);
        let n = profile.n();
        let mut owned_len = vec![0.0; n];
        let mut incoming = vec![Vec::new(); n];
        for (u, s) in profile.strategies.iter().enumerate() {
            for &v in s {
                owned_len[u] += weights.get(u, v);
                incoming[v].push(u);
            }
        }
        Ok(Self {
            weights,
            alpha,
            profile: profile.clone(),
            network,
            dist,
            owned_len,
            incoming,
        })
    }

    pub fn n(&self) -> usize {
        self.profile.n()
    }

    /// `alpha * (owned length) + (sum of distances)` for agent `u`.
    pub fn cost(&self, u: usize) -> f64 {
        self.alpha * self.owned_len[u] + self.dist.row(u).iter().sum::<f64>()
    }

    pub fn owned_len(&self, u: usize) -> f64 {
        self.owned_len[u]
    }

    pub fn incoming(&self, u: usize) -> &[usize] {
        &self.incoming[u]
    }

    pub fn social_cost(&self) -> f64 {
        (0..self.n()).map(|u| self.cost(u)).sum()
    }
}

/// An agent's best found alternative strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub agent: usize,
    pub strategy: Vec<usize>,
    pub cost: f64,
    pub current_cost: f64,
}

impl Deviation {
    /// `current / best`, at least 1.
    pub fn ratio(&self) -> f64 {
        if self.cost >= self.current_cost {
            1.0
        } else if self.cost == 0.0 {
            f64::INFINITY
        } else {
            self.current_cost / self.cost
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Heuristic,
    /// Exact when `n` is within the exhaustive limit, heuristic otherwise.
    Auto,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "heuristic" => Ok(Mode::Heuristic),
            "auto" => Ok(Mode::Auto),
            _ => Err(Error::Input(format!("unknown mode {s:?} (exact|heuristic|auto)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Heuristic => "heuristic",
            Mode::Auto => "auto",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Exact,
    LowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaKind {
    Exact,
    UpperBound,
    /// No reference optimum was supplied.
    Unknown,
}

/// Reference value for `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaReference {
    /// Brute-force optimum when `n <= OPTIMUM_LIMIT`, otherwise the lower
    /// bound `alpha * w(MST) + sum of pairwise weights`. Only meaningful
    /// when `weights` is a metric.
    Auto,
    /// The social optimum itself.
    Optimum(f64),
    /// A lower bound on the optimum.
    LowerBound(f64),
    Skip,
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    pub mode: Mode,
    pub exec: Exec,
    pub exhaustive_limit: usize,
    pub gamma: GammaReference,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Auto,
            exec: Exec::default(),
            exhaustive_limit: EXHAUSTIVE_LIMIT,
            gamma: GammaReference::Auto,
        }
    }
}

impl CertifyOptions {
    pub fn mode(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

/// Audit result. Infinite values serialize as `null`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaGammaCertificate {
    pub beta: f64,
    pub beta_kind: BetaKind,
    pub gamma: f64,
    pub gamma_kind: GammaKind,
    pub worst_agent: usize,
    pub deviation: Vec<usize>,
    pub social_cost: f64,
    /// Per-agent best found deviation.
    pub agents: Vec<Deviation>,
}

impl BetaGammaCertificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Whether no agent can improve by more than the relative tolerance.
    pub fn is_ne(&self) -> bool {
        self.beta <= 1.0 + crate::REL_TOL
    }
}

/// Computes `beta` (exact or lower bound) and `gamma` (exact or upper bound).
pub fn certify(profile: &StrategyProfile, weights: &DistMatrix, alpha: f64, mode: Mode) -> Result<BetaGammaCertificate> {
    certify_with(profile, weights, alpha, &CertifyOptions::mode(mode))
}

pub fn certify_with(
    profile: &StrategyProfile,
    weights: &DistMatrix,
    alpha: f64,
    opts: &CertifyOptions,
) -> Result<BetaGammaCertificate> {
    let n = profile.n();
    let exact = match opts.mode {
        Mode::Exact => {
            if n > opts.exhaustive_limit {
                return Err(Error::TooLarge {
                    n,
                    limit: opts.exhaustive_limit,
                });
            }
            true
        }
        Mode::Heuristic => false,
        Mode::Auto => n <= opts.exhaustive_limit,
    };
    let state = GameState::with_exec(profile, weights, alpha, opts.exec)?;
    let agents: Vec<Deviation> = if exact {
        par::map_range(opts.exec, n, |u| exact_best_response_limited(&state, u, opts.exhaustive_limit))
            .into_iter()
            .collect::<Result<_>>()?
    } else {
        par::map_range(opts.exec, n, |u| heuristic_deviations(&state, u))
    };
    let mut worst = 0;
    let mut beta = 1.0;
    for (u, d) in agents.iter().enumerate() {
        let r = d.ratio();
        if r > beta {
            beta = r;
            worst = u;
        }
    }
    let social_cost = state.social_cost();
    let (reference, gamma_kind) = match opts.gamma {
        GammaReference::Auto => {
            if n <= OPTIMUM_LIMIT {
                (brute_force_optimum(weights, alpha)?.social_cost, GammaKind::Exact)
            } else {
                (optimum_lower_bound(weights, weights, alpha), GammaKind::UpperBound)
            }
        }
        GammaReference::Optimum(v) => (v, GammaKind::Exact),
        GammaReference::LowerBound(v) => (v, GammaKind::UpperBound),
        GammaReference::Skip => (f64::NAN, GammaKind::Unknown),
    };
    let gamma = if gamma_kind == GammaKind::Unknown {
        f64::NAN
    } else {
        (social_cost / reference).max(1.0)
    };
    Ok(BetaGammaCertificate {
        beta,
        beta_kind: if exact { BetaKind::Exact } else { BetaKind::LowerBound },
        gamma,
        gamma_kind,
        worst_agent: worst,
        deviation: agents[worst].strategy.clone(),
        social_cost,
        agents,
    })
}

/// Smallest `alpha` from which the star centered at `center` is a NE:
/// `max over pairs u, v of (w(u,c) + w(c,v)) / w(u,v) - 1`, at least 0.
pub fn star_ne_threshold(weights: &DistMatrix, center: usize) -> Result<f64> {
    let n = weights.n();
    if center >= n {
        return crate::error::input(format!("center {center} out of range (n = {n})"));
    }
    let mut best: f64 = 0.0;
    for u in 0..n {
        for v in (u + 1)..n {
            if u == center || v == center {
                continue;
            }
            let detour = (weights.get(u, center) + weights.get(center, v)) / weights.get(u, v) - 1.0;
            best = best.max(detour);
        }
    }
    Ok(best)
}
