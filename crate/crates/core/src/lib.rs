//! Design and audit of networks for the Euclidean (and host-based) generalized
//! network creation game.
//!
//! Agents are points; each agent buys incident edges at price `alpha` times the
//! edge length and pays the sum of its shortest-path distances to everybody
//! else. The crate builds networks that are simultaneously close to the social
//! optimum and close to a Nash equilibrium, and it audits arbitrary networks by
//! computing (or lower-bounding) their stability factor `beta` and their
//! efficiency factor `gamma`.
//!
//! Module map:
//!
//! - [`geometry`]: points, distance caching, point-set statistics, generators.
//! - [`game`]: strategy profiles, induced networks, shortest paths, costs.
//! - [`spanner`]: greedy t-spanners, stretch measurement, ownership balancing.
//! - [`designer`]: the cluster/spanner designer and the baseline designers.
//! - [`equilibrium`]: best-response oracles, certificates, dynamics.
//! - [`constructions`]: named lower-bound and witness instances.
//! - [`hostgame`]: arbitrary weighted host networks.

pub mod constructions;
pub mod designer;
pub mod equilibrium;
mod error;
pub mod game;
pub mod geometry;
pub mod hostgame;
pub mod par;
pub mod spanner;

pub use error::{Error, Result};
pub use geometry::{DistMatrix, Point, PointSet};
pub use game::{CostReport, Network, StrategyProfile};

/// Default relative tolerance for floating point comparisons.
pub const REL_TOL: f64 = 1e-9;

/// A move is improving only if it lowers the mover's cost by more than this.
pub const IMPROVEMENT_EPS: f64 = 1e-12;

/// `a <= b` up to relative tolerance `tol` (with an absolute floor of `tol`).
pub fn approx_le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * b.abs().max(1.0)
}

/// `a == b` up to relative tolerance `tol`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
