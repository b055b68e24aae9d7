mod experiment;
mod instance;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stablenet::constructions::{dinfty_star_with, pos_instance, r1_chain, triangle_clusters, DEFAULT_EPSILON};
use stablenet::designer::{choose_params, clique_profile, design, star_profile, Designer};
use stablenet::equilibrium::{certify_with, run_dynamics, CertifyOptions, DynamicsOutcome, Mode, Policy};
use stablenet::geometry::{integer_grid, random_unit_square, seeded_rng, InstanceFile};
use stablenet::hostgame::{
    generalized_algorithm1, hitting_set_instance, host_mst_profile, metric_closure_reduce, parse_sets, HostNetwork,
};
use stablenet::par::Exec;
use stablenet::StrategyProfile;

use experiment::{ExperimentSpec, Source};
use instance::{emit, label, load_profile, Instance};

/// Exit status when a certified bound is violated.
const BOUND_VIOLATED: u8 = 2;

#[derive(Parser)]
#[command(name = "stablenet", version, about = "Design and audit near-stable networks over point sets and host graphs")]
struct Cli {
    /// Run every data-parallel kernel sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance (points plus any named profiles, or a host network).
    Generate(GenerateArgs),
    /// Build a profile with one of the designers.
    Design {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "alg1")]
        designer: Designer,
        #[arg(long)]
        alpha: Option<f64>,
        /// Profile output; the summary goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify beta and gamma of a profile.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// Profile file, or the name of a profile stored in the instance.
        #[arg(long)]
        profile: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "auto")]
        mode: Mode,
        /// Exit with status 2 if beta exceeds this bound.
        #[arg(long)]
        bound: Option<f64>,
        /// Certificate JSON output (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Append a CSV summary row to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run round-robin improving-response dynamics.
    Dynamics {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "best-response")]
        policy: Policy,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Start profile: `empty`, `random` (uses --seed), or a profile file or stored name.
        #[arg(long, default_value = "empty")]
        start: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include every move in the output.
        #[arg(long)]
        trajectory: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep designers and alpha values; one CSV row per run.
    Experiment(ExperimentArgs),
    /// Drop every host edge that is not a shortest path.
    Reduce {
        #[arg(long)]
        host: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Host network of the hitting-set reduction, plus its restricted minimizer.
    HsInstance {
        #[arg(long)]
        universe: usize,
        /// Sets as 1-based element lists, e.g. "1,2;2,3".
        #[arg(long)]
        sets: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Host JSON output; the summary goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    RandomSquare,
    Grid,
    R1Chain,
    DinftyStar,
    TriangleClusters,
    PosInstance,
    HsInstance,
    RandomHost,
}

#[derive(clap::Args)]
struct GenerateArgs {
    preset: Preset,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Grid side lengths, e.g. "3,3".
    #[arg(long, value_delimiter = ',')]
    dims: Vec<u32>,
    /// Dimension for dinfty-star.
    #[arg(long, default_value_t = 8)]
    d: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    universe: Option<usize>,
    #[arg(long)]
    sets: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepPreset {
    R1Poa,
    Alg1Random,
    Grid,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long, conflicts_with = "instance")]
    preset: Option<SweepPreset>,
    /// Point instance to sweep instead of a preset.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "alg1")]
    designers: Vec<Designer>,
    /// Alpha values; preset defaults apply when omitted.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Number of random instances (seeds seed..seed+count).
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid side and dimensions for the grid preset.
    #[arg(long, default_value_t = 2)]
    side: u32,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    dims: Vec<usize>,
    #[arg(long, default_value = "auto")]
    mode: Mode,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match run(cli.command, exec) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command, exec: Exec) -> Result<u8> {
    match command {
        Command::Generate(args) => generate(&args).map(|_| 0),
        Command::Design {
            instance,
            designer,
            alpha,
            out,
        } => cmd_design(&instance, designer, alpha, out.as_deref()).map(|_| 0),
        Command::Verify {
            instance,
            profile,
            alpha,
            mode,
            bound,
            out,
            csv,
        } => cmd_verify(&instance, &profile, alpha, mode, bound, out.as_deref(), csv.as_deref(), exec),
        Command::Dynamics {
            instance,
            alpha,
            policy,
            max_steps,
            start,
            seed,
            trajectory,
            out,
        } => cmd_dynamics(&instance, alpha, policy, max_steps, &start, seed, trajectory, out.as_deref()).map(|_| 0),
        Command::Experiment(args) => cmd_experiment(&args, exec),
        Command::Reduce { host, out } => {
            let host = HostNetwork::load(&host)?;
            emit(out.as_deref(), &metric_closure_reduce(&host).to_json()?)?;
            Ok(0)
        }
        Command::HsInstance {
            universe,
            sets,
            alpha,
            out,
        } => cmd_hs_instance(universe, &sets, alpha, out.as_deref()).map(|_| 0),
    }
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let out = a.out.as_deref();
    let file = match a.preset {
        Preset::RandomSquare => InstanceFile::new(&random_unit_square(a.n, a.seed), a.alpha, a.seed),
        Preset::Grid => {
            if a.dims.is_empty() {
                bail!("grid needs --dims, e.g. --dims 3,3");
            }
            InstanceFile::new(&integer_grid(&a.dims)?, a.alpha, a.seed)
        }
        Preset::R1Chain => {
            let c = r1_chain(a.alpha, a.n)?;
            let mut f = InstanceFile::new(&c.points, a.alpha, a.seed);
            f.profiles.insert("star".into(), c.star);
            f.profiles.insert("path".into(), c.path);
            f
        }
        Preset::DinftyStar => {
            let s = dinfty_star_with(a.d, a.alpha, false)?;
            let mut f = InstanceFile::new(&s.points, a.alpha, a.seed);
            f.profiles.insert("star_u".into(), s.star_u);
            f.profiles.insert("star_m".into(), s.star_m);
            f
        }
        Preset::TriangleClusters => {
            let t = triangle_clusters(a.alpha, a.epsilon)?;
            let mut f = InstanceFile::new(&t.points, a.alpha, a.seed);
            f.profiles.insert("triangle".into(), t.profile);
            f
        }
        Preset::PosInstance => {
            let p = pos_instance(a.alpha, a.epsilon)?;
            let mut f = InstanceFile::new(&p.points, a.alpha, a.seed);
            f.profiles.insert("three_edge".into(), p.three_edge);
            f.profiles.insert("two_edge".into(), p.two_edge);
            f
        }
        Preset::HsInstance => {
            let (Some(universe), Some(sets)) = (a.universe, a.sets.as_deref()) else {
                bail!("hs-instance needs --universe and --sets");
            };
            let inst = hitting_set_instance(universe, &parse_sets(sets)?, a.alpha)?;
            return emit(out, &inst.host.to_json()?);
        }
        Preset::RandomHost => return emit(out, &HostNetwork::random(a.n, a.seed)?.to_json()?),
    };
    emit(out, &file.to_json()?)
}

#[derive(Serialize)]
struct DesignSummary {
    designer: String,
    n: usize,
    alpha: f64,
    /// Guaranteed upper bound on beta, when the designer has one.
    bound: Option<f64>,
    branch: Option<String>,
    k: Option<usize>,
    t_meas: Option<f64>,
    social_cost: f64,
    edges: usize,
}

fn cmd_design(path: &Path, designer: Designer, alpha: Option<f64>, out: Option<&Path>) -> Result<()> {
    let inst = Instance::load(path)?;
    let alpha = inst.alpha(alpha)?;
    let n = inst.n();
    let (profile, bound, branch, k, t_meas) = match &inst {
        Instance::Points { points, .. } => {
            let d = design(points, designer, alpha)?;
            let a1 = d.alg1.as_ref();
            (
                d.profile,
                d.bound,
                a1.map(|o| format!("{:?}", o.branch).to_lowercase()),
                a1.map(|o| o.k),
                a1.map(|o| o.t_meas),
            )
        }
        Instance::Host { host, .. } => match designer {
            Designer::Alg1 => {
                let d = generalized_algorithm1(host, &choose_params(alpha, n), alpha)?;
                let branch = format!("{:?}", d.branch).to_lowercase();
                (d.profile, Some(d.bound.beta), Some(branch), Some(d.k), Some(d.t_meas))
            }
            Designer::Mst => (host_mst_profile(host), None, None, None, None),
            Designer::Clique => (clique_profile(n), Some(alpha + 1.0), None, None, None),
            Designer::Star => (star_profile(n, 0)?, None, None, None, None),
            other => bail!("designer {other} needs a point instance"),
        },
    };
    let summary = DesignSummary {
        designer: designer.to_string(),
        n,
        alpha,
        bound,
        branch,
        k,
        t_meas,
        social_cost: stablenet::game::social_cost(&profile, inst.weights(), alpha)?,
        edges: profile.edge_count(),
    };
    match out {
        Some(p) => {
            emit(Some(p), &profile.to_json()?)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        None => {
            println!("{}", profile.to_json()?);
            eprintln!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyRow<'a> {
    instance: &'a str,
    profile: &'a str,
    n: usize,
    alpha: f64,
    mode: String,
    beta: f64,
    beta_kind: String,
    gamma: Option<f64>,
    gamma_kind: String,
    social_cost: f64,
    is_ne: bool,
    worst_agent: usize,
    bound: Option<f64>,
    bound_ok: bool,
    runtime_ms: u128,
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    path: &Path,
    profile_arg: &str,
    alpha: Option<f64>,
    mode: Mode,
    bound: Option<f64>,
    out: Option<&Path>,
    csv_path: Option<&Path>,
    exec: Exec,
) -> Result<u8> {
    let inst = Instance::load(path)?;
    let alpha = inst.alpha(alpha)?;
    let profile = load_profile(&inst, profile_arg)?;
    let start = Instant::now();
    let opts = CertifyOptions {
        mode,
        exec,
        gamma: inst.gamma_reference(alpha),
        ..CertifyOptions::default()
    };
    let cert = certify_with(&profile, inst.weights(), alpha, &opts)?;
    let bound_ok = bound.is_none_or(|b| cert.beta <= b * (1.0 + stablenet::REL_TOL));
    emit(out, &cert.to_json()?)?;
    if let Some(p) = csv_path {
        let fresh = std::fs::metadata(p).map_or(true, |m| m.len() == 0);
        let file = std::fs::OpenOptions::new().create(true).append(true).open(p)?;
        let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        w.serialize(VerifyRow {
            instance: &path.display().to_string(),
            profile: profile_arg,
            n: inst.n(),
            alpha,
            mode: mode.to_string(),
            beta: cert.beta,
            beta_kind: label(&cert.beta_kind),
            gamma: cert.gamma.is_finite().then_some(cert.gamma),
            gamma_kind: label(&cert.gamma_kind),
            social_cost: cert.social_cost,
            is_ne: cert.is_ne(),
            worst_agent: cert.worst_agent,
            bound,
            bound_ok,
            runtime_ms: start.elapsed().as_millis(),
        })?;
        w.flush()?;
    }
    if !bound_ok {
        eprintln!("beta {} exceeds the bound {}", cert.beta, bound.unwrap_or_default());
        return Ok(BOUND_VIOLATED);
    }
    Ok(0)
}

#[derive(Serialize)]
struct DynamicsReport {
    #[serde(flatten)]
    outcome: DynamicsOutcome,
    steps: usize,
    seed: u64,
    alpha: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_dynamics(
    path: &Path,
    alpha: Option<f64>,
    policy: Policy,
    max_steps: usize,
    start: &str,
    seed: u64,
    trajectory: bool,
    out: Option<&Path>,
) -> Result<()> {
    let inst = Instance::load(path)?;
    let alpha = inst.alpha(alpha)?;
    let n = inst.n();
    let profile0 = match start {
        "empty" => StrategyProfile::empty(n),
        "random" => {
            use rand::Rng;
            let mut rng = seeded_rng(seed);
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (0..n).map(move |v| (u, v)))
                .filter(|&(u, v)| u != v)
                .filter(|_| rng.gen::<f64>() < 0.3)
                .collect();
            StrategyProfile::from_owned_edges(n, edges)
        }
        other => load_profile(&inst, other)?,
    };
    let mut outcome = run_dynamics(&profile0, inst.weights(), alpha, policy, None, max_steps)?;
    let steps = outcome.trajectory_len();
    if !trajectory {
        outcome.moves.clear();
    }
    let report = DynamicsReport {
        outcome,
        steps,
        seed,
        alpha,
    };
    emit(out, &serde_json::to_string_pretty(&report)?)
}

fn cmd_experiment(a: &ExperimentArgs, exec: Exec) -> Result<u8> {
    let (source, default_alphas): (Source, Vec<f64>) = match (a.preset, &a.instance) {
        (Some(SweepPreset::R1Poa), _) => (Source::R1Poa, vec![1e2, 1e3, 1e4]),
        (Some(SweepPreset::Alg1Random), _) => (
            Source::Alg1Random {
                n: a.n,
                count: a.count,
            },
            (1..=10).map(f64::from).collect(),
        ),
        (Some(SweepPreset::Grid), _) => (
            Source::Grid {
                side: a.side,
                dims: a.dims.clone(),
            },
            vec![0.5, 2.0, 10.0],
        ),
        (None, Some(p)) => (Source::File(p.clone()), vec![1.0]),
        (None, None) => bail!("experiment needs --preset or --instance"),
    };
    let spec = ExperimentSpec {
        source,
        designers: a.designers.clone(),
        alphas: if a.alpha.is_empty() { default_alphas } else { a.alpha.clone() },
        mode: a.mode,
        seed: a.seed,
        exec,
    };
    let rows = experiment::run(&spec)?;
    match &a.out {
        Some(p) => experiment::write_csv(&rows, std::fs::File::create(p)?)?,
        None => experiment::write_csv(&rows, std::io::stdout().lock())?,
    }
    let violated = rows.iter().filter(|r| r.violates_bound()).count();
    let errors = rows.iter().filter(|r| !r.error.is_empty()).count();
    if errors > 0 {
        eprintln!("{errors} of {} rows failed", rows.len());
    }
    if violated > 0 {
        eprintln!("{violated} rows exceed their bound");
        return Ok(BOUND_VIOLATED);
    }
    Ok(0)
}

#[derive(Serialize)]
struct HsSummary {
    universe: usize,
    sets: Vec<Vec<usize>>,
    alpha: f64,
    params: stablenet::hostgame::ReductionParams,
    nodes: usize,
    /// Cheapest member of the restricted family (elements 1-based).
    minimizer: Vec<usize>,
    minimizer_social_cost: f64,
}

fn cmd_hs_instance(universe: usize, sets: &str, alpha: f64, out: Option<&Path>) -> Result<()> {
    let inst = hitting_set_instance(universe, &parse_sets(sets)?, alpha)?;
    let best = inst.restricted_minimizer()?;
    let summary = HsSummary {
        universe,
        sets: inst.sets.iter().map(|s| s.iter().map(|e| e + 1).collect()).collect(),
        alpha,
        params: inst.params,
        nodes: inst.host.n(),
        minimizer: best.hitting.iter().map(|e| e + 1).collect(),
        minimizer_social_cost: best.social_cost,
    };
    match out {
        Some(p) => {
            emit(Some(p), &inst.host.to_json()?)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        None => println!("{}", serde_json::to_string_pretty(&summary)?),
    }
    Ok(())
}
