//! Experiment sweeps. Every row is computed independently (in parallel when
//! enabled) and written in input order.

use std::time::Instant;

use anyhow::{bail, Result};
use serde::Serialize;
use stablenet::constructions::{r1_chain, r1_chain_length, r1_poa_ratio};
use stablenet::designer::{design, Designer};
use stablenet::equilibrium::{certify_with, CertifyOptions, Mode};
use stablenet::geometry::{integer_grid, random_unit_square, InstanceFile};
use stablenet::par::{map_slice, Exec};

use crate::instance::{label, Instance};

/// One CSV row. Column order is the documented schema.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub instance: String,
    pub n: usize,
    pub alpha: f64,
    pub designer: String,
    pub formula_beta: Option<f64>,
    pub certified_beta: Option<f64>,
    pub beta_kind: String,
    pub sc: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_kind: String,
    /// Preset-specific ratio: `SC(star) / SC(path)` for `r1-poa`.
    pub ratio: Option<f64>,
    pub runtime_ms: u128,
    pub seed: u64,
    pub error: String,
}

impl Row {
    /// Certified beta strictly above the formula bound.
    pub fn violates_bound(&self) -> bool {
        match (self.certified_beta, self.formula_beta) {
            (Some(b), Some(f)) => b > f * (1.0 + stablenet::REL_TOL),
            _ => false,
        }
    }
}

pub enum Source {
    R1Poa,
    Alg1Random { n: usize, count: u64 },
    Grid { side: u32, dims: Vec<usize> },
    File(std::path::PathBuf),
}

pub struct ExperimentSpec {
    pub source: Source,
    pub designers: Vec<Designer>,
    pub alphas: Vec<f64>,
    pub mode: Mode,
    pub seed: u64,
    pub exec: Exec,
}

struct Job {
    label: String,
    instance: InstanceFile,
    designer: Designer,
    alpha: f64,
    ratio: Option<f64>,
}

pub fn run(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    if spec.alphas.is_empty() {
        bail!("no alpha values given");
    }
    // a job that could not even be set up carries its error row
    let mut jobs: Vec<std::result::Result<Job, Row>> = Vec::new();
    match &spec.source {
        Source::R1Poa => {
            for &alpha in &spec.alphas {
                let built = r1_poa_ratio(alpha)
                    .and_then(|r| r1_chain(alpha, r.n).map(|c| (r.ratio, c)));
                match built {
                    Ok((ratio, chain)) => {
                        let mut file = InstanceFile::new(&chain.points, alpha, spec.seed);
                        file.profiles.insert("star".into(), chain.star);
                        jobs.push(Ok(Job {
                            label: format!("r1-chain-{}", r1_chain_length(alpha)),
                            instance: file,
                            designer: Designer::Star,
                            alpha,
                            ratio: Some(ratio),
                        }));
                    }
                    Err(e) => jobs.push(Err(error_row("r1-chain", alpha, "star", spec.seed, e.to_string()))),
                }
            }
        }
        Source::Alg1Random { n, count } => {
            for i in 0..*count {
                let seed = spec.seed + i;
                let pts = random_unit_square(*n, seed);
                for &alpha in &spec.alphas {
                    for &designer in &spec.designers {
                        jobs.push(Ok(Job {
                            label: format!("random-square-{n}"),
                            instance: InstanceFile::new(&pts, alpha, seed),
                            designer,
                            alpha,
                            ratio: None,
                        }));
                    }
                }
            }
        }
        Source::Grid { side, dims } => {
            for &d in dims {
                let pts = integer_grid(&vec![*side; d])?;
                for &alpha in &spec.alphas {
                    jobs.push(Ok(Job {
                        label: format!("grid-{d}d-{side}"),
                        instance: InstanceFile::new(&pts, alpha, spec.seed),
                        designer: Designer::Grid,
                        alpha,
                        ratio: None,
                    }));
                }
            }
        }
        Source::File(path) => {
            let Instance::Points { file, .. } = Instance::load(path)? else {
                bail!("experiments need a point instance");
            };
            for &alpha in &spec.alphas {
                for &designer in &spec.designers {
                    jobs.push(Ok(Job {
                        label: path.display().to_string(),
                        instance: file.clone(),
                        designer,
                        alpha,
                        ratio: None,
                    }));
                }
            }
        }
    }
    Ok(map_slice(spec.exec, &jobs, |job| match job {
        Ok(job) => run_job(job, spec),
        Err(row) => row.clone(),
    }))
}

fn error_row(instance: &str, alpha: f64, designer: &str, seed: u64, error: String) -> Row {
    Row {
        instance: instance.into(),
        n: 0,
        alpha,
        designer: designer.into(),
        formula_beta: None,
        certified_beta: None,
        beta_kind: String::new(),
        sc: None,
        gamma: None,
        gamma_kind: String::new(),
        ratio: None,
        runtime_ms: 0,
        seed,
        error,
    }
}

fn run_job(job: &Job, spec: &ExperimentSpec) -> Row {
    let start = Instant::now();
    let mut row = error_row(&job.label, job.alpha, job.designer.name(), job.instance.seed, String::new());
    row.n = job.instance.points.len();
    row.ratio = job.ratio;
    let result = (|| -> Result<()> {
        let points = job.instance.point_set()?;
        let (profile, bound) = match job.instance.profiles.get("star") {
            Some(p) if job.designer == Designer::Star => (p.clone(), None),
            _ => {
                let d = design(&points, job.designer, job.alpha)?;
                (d.profile, d.bound)
            }
        };
        row.formula_beta = bound;
        let opts = CertifyOptions {
            mode: spec.mode,
            exec: spec.exec,
            ..CertifyOptions::default()
        };
        let cert = certify_with(&profile, points.distances(), job.alpha, &opts)?;
        row.certified_beta = Some(cert.beta);
        row.beta_kind = label(&cert.beta_kind);
        row.sc = Some(cert.social_cost);
        row.gamma = cert.gamma.is_finite().then_some(cert.gamma);
        row.gamma_kind = label(&cert.gamma_kind);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = e.to_string();
    }
    row.runtime_ms = start.elapsed().as_millis();
    row
}

pub fn write_csv<W: std::io::Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
