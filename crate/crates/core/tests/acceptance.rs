//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! nonzero status if any criterion fails. Positional arguments select
//! criteria by number, e.g. `cargo test --test acceptance -- 2 7`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use stablenet::constructions::{
    dinfty_star, dinfty_star_with, dinfty_x, pos_instance, r1_chain, r1_path_cost, r1_poa_ratio, r1_star_cost,
    triangle_clusters, weird_sum_check,
};
use stablenet::designer::{
    algorithm1, choose_params, clique_profile, grid_profile, mst_profile, star_profile,
    Algorithm1Params, Branch,
};
use stablenet::equilibrium::{
    brute_force_optimum, certify_with, exact_best_response, heuristic_deviations, optimum_lower_bound, run_dynamics,
    run_dynamics_with, search_cycles, star_ne_threshold, BetaKind, CertifyOptions, DynamicsKind, GameState,
    GammaReference, Mode, MoveRecord, Policy, OPTIMUM_LIMIT,
};
use stablenet::game::{social_cost, StrategyProfile};
use stablenet::geometry::{corner_square_occupancy, integer_grid, random_unit_square, seeded_rng};
use stablenet::hostgame::{
    host_mst_profile, host_poa_audit, hitting_set_instance, metric_closure_reduce, reduce_weights, shortest_path_subgraph_profile,
    HostNetwork,
};
use stablenet::{game::floyd_warshall, Result, IMPROVEMENT_EPS};

use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn exact_opts(gamma: GammaReference) -> CertifyOptions {
    CertifyOptions {
        mode: Mode::Exact,
        gamma,
        ..CertifyOptions::default()
    }
}

fn heuristic_opts(gamma: GammaReference) -> CertifyOptions {
    CertifyOptions {
        mode: Mode::Heuristic,
        gamma,
        ..CertifyOptions::default()
    }
}

/// Chain costs against their closed forms, and the summation identity.
fn criterion_1() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for alpha in [0.5, 1.0, 2.0, 10.0, 100.0] {
        for n in 1..=20 {
            let c = r1_chain(alpha, n)?;
            let s = social_cost(&c.star, c.points.distances(), alpha)?;
            let p = social_cost(&c.path, c.points.distances(), alpha)?;
            let (l, r) = weird_sum_check(alpha, n);
            worst = worst
                .max(rel(s, r1_star_cost(alpha, n)))
                .max(rel(p, r1_path_cost(alpha, n)))
                .max(rel(l, r));
            cells += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{cells} cells, worst relative error {worst:.2e}"))
}

/// Lower-bound ratio on the line, and stability of the star for alpha = 8.
fn criterion_2() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [1e3, 1e4, 1e5] {
        let r = r1_poa_ratio(alpha)?;
        let scaled = r.ratio / alpha.powf(2.0 / 3.0);
        pass &= (0.5..=0.7).contains(&scaled) && rel(r.ratio, r.formula_ratio) <= 1e-6;
        parts.push(format!(
            "alpha={alpha:e}: n={} ratio/alpha^(2/3)={scaled:.4} (closed form off by {:.1e})",
            r.n,
            rel(r.ratio, r.formula_ratio)
        ));
    }
    let small = r1_poa_ratio(8.0)?;
    let beta = small.star_beta.unwrap_or(f64::INFINITY);
    pass &= small.n == 4 && (beta - 1.0).abs() <= 1e-9;
    parts.push(format!("alpha=8: n={} star beta={beta:.12}", small.n));
    outcome(pass, parts.join("; "))
}

/// The high-dimensional star.
fn criterion_3() -> Result<Outcome> {
    let x = dinfty_x(2.0)?;
    let far = dinfty_star_with(200, 2.0, false)?;
    let limit = (1.0 + x * x).sqrt();
    let d8 = dinfty_star(8, 2.0)?;
    let beta = d8.star_u_beta.unwrap_or(f64::INFINITY);
    let pass = rel(x, 4.0 / 3.0) <= 1e-12 && rel(far.ratio, limit) <= 0.05 && (beta - 1.0).abs() <= 1e-9;
    outcome(
        pass,
        format!(
            "x={x:.6}; d=200 ratio={:.5} vs {limit:.5} ({:.2}% off); d=8 (n=16) exact beta={beta:.12}",
            far.ratio,
            100.0 * rel(far.ratio, limit)
        ),
    )
}

/// Clique, MST and grid guarantees with the exhaustive oracle.
fn criterion_4() -> Result<Outcome> {
    let mut violations = Vec::new();
    let mut checks = 0;
    for seed in 0..50u64 {
        let n = 2 + (seed % 7) as usize;
        let pts = random_unit_square(n, 1000 + seed);
        for alpha in [0.5, 2.0, 10.0] {
            let opt = (n <= OPTIMUM_LIMIT)
                .then(|| brute_force_optimum(pts.distances(), alpha))
                .transpose()?;
            let gamma = match &opt {
                Some(o) => GammaReference::Optimum(o.social_cost),
                None => GammaReference::LowerBound(optimum_lower_bound(pts.distances(), pts.distances(), alpha)),
            };
            let c = certify_with(&clique_profile(n), pts.distances(), alpha, &exact_opts(gamma))?;
            checks += 1;
            if c.beta > (alpha + 1.0) * (1.0 + 1e-9) {
                violations.push(format!("clique beta {} seed {seed} alpha {alpha}", c.beta));
            }
            if opt.is_some() && c.gamma > (alpha / 2.0 + 1.0) * (1.0 + 1e-9) {
                violations.push(format!("clique gamma {} seed {seed} alpha {alpha}", c.gamma));
            }
            let m = certify_with(&mst_profile(&pts), pts.distances(), alpha, &exact_opts(gamma))?;
            checks += 1;
            let bound = (n as f64 - 1.0).max(1.0);
            if m.beta > bound * (1.0 + 1e-9) || m.gamma > bound * (1.0 + 1e-9) {
                violations.push(format!("mst beta {} gamma {} seed {seed} alpha {alpha}", m.beta, m.gamma));
            }
        }
    }
    for bounds in [vec![1, 1], vec![1, 2], vec![4], vec![7]] {
        let g = integer_grid(&bounds)?;
        let (p, d) = grid_profile(&g)?;
        for alpha in [0.5, 2.0, 10.0] {
            let c = certify_with(&p, g.distances(), alpha, &exact_opts(GammaReference::Skip))?;
            checks += 1;
            if c.beta > 2.0 * d as f64 * (1.0 + 1e-9) {
                violations.push(format!("grid {bounds:?} beta {} alpha {alpha}", c.beta));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{checks} certificates, {} violations {:?}", violations.len(), violations),
    )
}

/// The cluster/spanner designer against its own bound.
fn criterion_5() -> Result<Outcome> {
    let mut violations = Vec::new();
    let mut worst_slack: f64 = f64::INFINITY;
    let mut rng = seeded_rng(55);
    for i in 0..20u64 {
        let n = 5 + (i % 8) as usize;
        let alpha = (n as f64).cbrt() * rng.gen_range(0.1..=1.0);
        let pts = random_unit_square(n, 500 + i);
        let params = choose_params(alpha, n);
        let out = algorithm1(&pts, &params, alpha)?;
        let c = certify_with(&out.profile, pts.distances(), alpha, &exact_opts(GammaReference::Skip))?;
        worst_slack = worst_slack.min(out.bound.beta / c.beta);
        if c.beta > out.bound.beta * (1.0 + 1e-9) {
            violations.push(format!("n={n} alpha={alpha:.3} beta={} bound={}", c.beta, out.bound.beta));
        }
    }
    let mut large = Vec::new();
    for (j, alpha) in [1.0, 2.0, 5.0].into_iter().enumerate() {
        let pts = random_unit_square(1000, 900 + j as u64);
        let params = choose_params(alpha, 1000);
        let out = algorithm1(&pts, &params, alpha)?;
        let c = certify_with(&out.profile, pts.distances(), alpha, &heuristic_opts(GammaReference::Skip))?;
        large.push(format!("alpha={alpha}: beta>={:.4} bound={:.3} k={}", c.beta, out.bound.beta, out.k));
        if c.beta > out.bound.beta * (1.0 + 1e-9) {
            violations.push(format!("n=1000 alpha={alpha} beta={} bound={}", c.beta, out.bound.beta));
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "20 small exact (min bound/beta {worst_slack:.3}); n=1000 {}; violations {:?}",
            large.join(", "),
            violations
        ),
    )
}

/// The (1+eps) regime on random points.
fn criterion_6() -> Result<Outcome> {
    let (n, eps, alpha, b) = (2000, 0.5, 1.0, 4.0);
    let t = 1.0 + eps / 2.0;
    let mut passed = 0;
    let mut lines = Vec::new();
    for seed in 0..20u64 {
        let pts = random_unit_square(n, 6000 + seed);
        // c depends on the measured ownership k of the spanner; the spanner
        // itself does not depend on c as long as no cluster forms
        let mut k_guess = 3usize;
        let out = loop {
            let c = 2.0 * k_guess as f64 * b * alpha / eps;
            let out = algorithm1(&pts, &Algorithm1Params { b, c, t }, alpha)?;
            if out.k <= k_guess {
                break out;
            }
            k_guess = out.k;
        };
        let c = out.params.c;
        let occ = corner_square_occupancy(&pts);
        let occupied = occ.iter().all(|&m| m as f64 >= c);
        let lb = optimum_lower_bound(pts.distances(), pts.distances(), alpha);
        let cert = certify_with(&out.profile, pts.distances(), alpha, &heuristic_opts(GammaReference::LowerBound(lb)))?;
        let ok = out.branch == Branch::Sparse
            && occupied
            && cert.beta <= 1.0 + eps + 1e-9
            && cert.gamma <= 1.0 + eps + 1e-9
            && out.bound.for_branch(out.branch) <= 1.0 + eps + 1e-9;
        passed += ok as usize;
        lines.push(format!(
            "seed {seed}: k={} t={:.3} c={c} occ={:?} beta>={:.5} gamma<={:.5}{}",
            out.k,
            out.t_meas,
            occ.iter().min().unwrap(),
            cert.beta,
            cert.gamma,
            if ok { "" } else { " FAIL" }
        ));
    }
    for l in &lines {
        println!("    {l}");
    }
    outcome(passed >= 18, format!("{passed}/20 seeds meet beta <= 1.5 and gamma <= 1.5"))
}

/// Instability of the optimum, and the price of stability.
fn criterion_7() -> Result<Outcome> {
    let tri = triangle_clusters(9.0, 1e-6)?;
    let pos = pos_instance(3.0, 1e-6)?;
    let pass = tri.drop_factor >= 1.0
        && pos.beta_two_kind == BetaKind::Exact
        && pos.beta_three > 1.0 + 1e-9
        && (pos.beta_two - 1.0).abs() <= 1e-9
        && pos.sc_two > pos.sc_three;
    outcome(
        pass,
        format!(
            "triangle alpha=9 n={} drop factor {:.6} (limit {:.6}); pos alpha=3 n={}: three-edge beta {:.6}, two-edge beta {:.12}, SC {:.4} > {:.4}",
            tri.points.len(),
            tri.drop_factor,
            tri.limit_factor,
            pos.points.len(),
            pos.beta_three,
            pos.beta_two,
            pos.sc_two,
            pos.sc_three
        ),
    )
}

/// The star threshold.
fn criterion_8() -> Result<Outcome> {
    let mut violations = Vec::new();
    for seed in 0..100u64 {
        let pts = random_unit_square(20, 8000 + seed);
        let center = (seed % 20) as usize;
        let th = star_ne_threshold(pts.distances(), center)?;
        if th > 2.0 * pts.aspect_ratio() - 1.0 {
            violations.push(format!("seed {seed}: threshold {th} above 2r-1"));
        }
        let star = star_profile(20, center)?;
        for alpha in [th.max(1e-3), 1.5 * th + 0.5] {
            let c = certify_with(&star, pts.distances(), alpha, &heuristic_opts(GammaReference::Skip))?;
            if (c.beta - 1.0).abs() > 1e-9 {
                violations.push(format!("seed {seed} alpha {alpha}: heuristic beta {}", c.beta));
            }
        }
    }
    for seed in 0..20u64 {
        let n = 5 + (seed % 8) as usize;
        let pts = random_unit_square(n, 8500 + seed);
        let th = star_ne_threshold(pts.distances(), 0)?;
        let c = certify_with(&star_profile(n, 0)?, pts.distances(), th.max(1e-3), &exact_opts(GammaReference::Skip))?;
        if (c.beta - 1.0).abs() > 1e-9 {
            violations.push(format!("exact seed {seed}: beta {}", c.beta));
        }
    }
    outcome(
        violations.is_empty(),
        format!("100 heuristic + 20 exact stars, {} violations {:?}", violations.len(), violations),
    )
}

/// Smallest hitting set by enumeration.
fn min_hitting_set(universe: usize, sets: &[Vec<usize>]) -> usize {
    (0u32..(1 << universe))
        .filter(|mask| sets.iter().all(|s| s.iter().any(|&e| mask >> e & 1 == 1)))
        .map(|mask| mask.count_ones() as usize)
        .min()
        .expect("the full universe hits every set")
}

/// Host networks.
fn criterion_9() -> Result<Outcome> {
    let mut problems = Vec::new();
    // reduction
    for seed in 0..50u64 {
        let n = 3 + (seed % 28) as usize;
        let host = HostNetwork::random(n, 9000 + seed)?;
        let red = metric_closure_reduce(&host);
        let again = reduce_weights(&red.weight_matrix());
        let dh = host.distances();
        let dm = floyd_warshall(&red.network);
        let preserving = (0..n).all(|i| (0..n).all(|j| (dm.get(i, j) - dh.get(i, j)).abs() <= 1e-12 * dh.get(i, j).max(1.0)));
        let tight = red.edges.iter().all(|&(u, v, w)| w == dm.get(u, v));
        let idempotent = again.edges == red.edges;
        if !(preserving && tight && idempotent) {
            problems.push(format!("reduction seed {seed}: preserving {preserving} tight {tight} idempotent {idempotent}"));
        }
    }
    // hitting sets
    let mut families = 0;
    for universe in 1..=3usize {
        let subsets: Vec<Vec<usize>> = (1u32..(1 << universe))
            .map(|m| (0..universe).filter(|&e| m >> e & 1 == 1).collect())
            .collect();
        let count = subsets.len();
        for pick in 1u32..(1 << count) {
            if pick.count_ones() > 3 {
                continue;
            }
            let sets: Vec<Vec<usize>> = (0..count).filter(|&i| pick >> i & 1 == 1).map(|i| subsets[i].clone()).collect();
            if (0..universe).any(|e| !sets.iter().any(|s| s.contains(&e))) {
                continue;
            }
            for alpha in [1.0, 4.0] {
                let inst = hitting_set_instance(universe, &sets, alpha)?;
                let best = inst.restricted_minimizer()?;
                let truth = min_hitting_set(universe, &sets);
                families += 1;
                if best.hitting.len() != truth {
                    problems.push(format!("sets {sets:?} alpha {alpha}: minimizer size {} vs {truth}", best.hitting.len()));
                }
            }
        }
    }
    // equilibria on random hosts
    let mut audited = 0;
    let mut max_ratio: f64 = 0.0;
    let mut max_stretch: f64 = 0.0;
    for seed in 0..30u64 {
        let n = 3 + (seed % 4) as usize;
        let host = HostNetwork::random(n, 9500 + seed)?;
        for alpha in [1.0, 2.0, 5.0] {
            let starts = [StrategyProfile::empty(n), host_mst_profile(&host), shortest_path_subgraph_profile(&host)];
            let mut nes = Vec::new();
            for s in &starts {
                let out = run_dynamics(s, host.weights(), alpha, Policy::BestResponse, None, 2000)?;
                if out.kind == DynamicsKind::Converged {
                    nes.push(out.final_profile);
                }
            }
            let audit = host_poa_audit(&host, alpha, &nes)?;
            audited += nes.len();
            max_ratio = max_ratio.max(audit.max_ratio / audit.ratio_bound);
            max_stretch = max_stretch.max(audit.max_stretch / (alpha + 1.0));
            if !audit.passed() {
                problems.push(format!("host seed {seed} alpha {alpha}: {audit:?}"));
            }
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "50 reductions; {families} hitting-set families; {audited} exact NE audited (max SC/LB over 2(alpha+1) = {max_ratio:.3}, max stretch over alpha+1 = {max_stretch:.3}); problems {:?}",
            problems
        ),
    )
}

fn random_profile(n: usize, seed: u64, density: f64) -> StrategyProfile {
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    StrategyProfile::from_owned_edges(n, edges)
}

/// Oracle consistency, dynamics and cycle detection.
fn criterion_10() -> Result<Outcome> {
    let mut problems = Vec::new();
    let mut states = 0;
    for seed in 0..300u64 {
        let n = 2 + (seed % 9) as usize;
        let pts = random_unit_square(n, 10_000 + seed);
        let alpha = 0.2 + (seed % 7) as f64;
        let p = random_profile(n, seed, 0.1 + 0.05 * (seed % 6) as f64);
        let st = GameState::new(&p, pts.distances(), alpha)?;
        for u in 0..n {
            let ex = exact_best_response(&st, u)?;
            let h = heuristic_deviations(&st, u);
            states += 1;
            if ex.cost > h.cost * (1.0 + 1e-9) {
                problems.push(format!("seed {seed} agent {u}: exact {} > heuristic {}", ex.cost, h.cost));
            }
        }
    }
    let mut moves = 0;
    let mut nes = 0;
    for seed in 0..60u64 {
        let n = 3 + (seed % 6) as usize;
        let pts = random_unit_square(n, 11_000 + seed);
        let alpha = [0.5, 1.0, 3.0][(seed % 3) as usize];
        for policy in [Policy::BestResponse, Policy::FirstImproving] {
            let out = run_dynamics(&random_profile(n, seed, 0.3), pts.distances(), alpha, policy, None, 1000)?;
            for m in &out.moves {
                moves += 1;
                if !(m.cost_after < m.cost_before - IMPROVEMENT_EPS) {
                    problems.push(format!("non-improving move {m:?}"));
                }
            }
            if policy == Policy::BestResponse && out.kind == DynamicsKind::Converged {
                let c = certify_with(&out.final_profile, pts.distances(), alpha, &exact_opts(GammaReference::Skip))?;
                nes += 1;
                if (c.beta - 1.0).abs() > 1e-9 {
                    problems.push(format!("converged profile has beta {}", c.beta));
                }
            }
        }
    }
    // a forced cycle: agent 0 alternates between two strategies
    let mut toggle = |p: &StrategyProfile, u: usize| -> Result<Option<MoveRecord>> {
        Ok((u == 0).then(|| MoveRecord {
            agent: 0,
            strategy: if p.strategy(0) == [1] { vec![2] } else { vec![1] },
            cost_before: 1.0,
            cost_after: 0.5,
        }))
    };
    let forced = run_dynamics_with(&StrategyProfile::empty(3), &[0, 1, 2], 100, &mut toggle)?;
    if forced.kind != DynamicsKind::Cycle || forced.cycle_len != Some(2) {
        problems.push(format!("forced cycle not detected: {:?}", forced.kind));
    }
    let (found, converged) = search_cycles(0..2000, 4, 1.0, 200)?;
    println!(
        "    best-response search, n=4, d=2, alpha=1: {} runs, {converged} converged, {} cycles",
        2000,
        found.len()
    );
    for w in found.iter().take(5) {
        println!("    cycle witness seed {}: {} profiles, points {:?}", w.seed, w.cycle.len() - 1, w.points);
    }
    outcome(
        problems.is_empty(),
        format!(
            "{states} agent states, {moves} dynamics moves, {nes} converged NE checked, forced cycle length {:?}, search cycles {}; problems {:?}",
            forced.cycle_len,
            found.len(),
            problems
        ),
    )
}

type Criterion = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(usize, Criterion, u64); 10] = [
        (1, criterion_1, 1),
        (2, criterion_2, 5),
        (3, criterion_3, 60),
        (4, criterion_4, 600),
        (5, criterion_5, 900),
        (6, criterion_6, 600),
        (7, criterion_7, 30),
        (8, criterion_8, 120),
        (9, criterion_9, 600),
        (10, criterion_10, 600),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, run, limit) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!(
            "criterion {id:>2}: {} ({:.2}s, limit {limit}s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
