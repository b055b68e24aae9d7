use std::path::Path;

use anyhow::{bail, Context, Result};
use stablenet::equilibrium::{optimum_lower_bound, GammaReference};
use stablenet::geometry::InstanceFile;
use stablenet::hostgame::HostNetwork;
use stablenet::{DistMatrix, PointSet, StrategyProfile};

/// Either a Euclidean instance file or a host network file, told apart by
/// their JSON keys (`points` vs `weights`).
pub enum Instance {
    Points { file: InstanceFile, points: PointSet },
    Host { host: HostNetwork, metric: DistMatrix },
}

impl Instance {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if value.get("points").is_some() {
            let file = InstanceFile::from_json(&text)?;
            let points = file.point_set()?;
            Ok(Instance::Points { file, points })
        } else if value.get("weights").is_some() {
            Ok(Self::from_host(HostNetwork::from_json(&text)?))
        } else {
            bail!("{}: neither a point instance nor a host network", path.display())
        }
    }

    pub fn from_host(host: HostNetwork) -> Self {
        let metric = host.distances();
        Instance::Host { host, metric }
    }

    pub fn n(&self) -> usize {
        self.weights().n()
    }

    pub fn weights(&self) -> &DistMatrix {
        match self {
            Instance::Points { points, .. } => points.distances(),
            Instance::Host { host, .. } => host.weights(),
        }
    }

    /// `--alpha` wins; point instances fall back to their stored alpha.
    pub fn alpha(&self, flag: Option<f64>) -> Result<f64> {
        match (flag, self) {
            (Some(a), _) => Ok(a),
            (None, Instance::Points { file, .. }) => Ok(file.alpha),
            (None, Instance::Host { .. }) => bail!("host networks carry no alpha; pass --alpha"),
        }
    }

    pub fn named_profile(&self, name: &str) -> Option<&StrategyProfile> {
        match self {
            Instance::Points { file, .. } => file.profiles.get(name),
            Instance::Host { .. } => None,
        }
    }

    /// Point sets use the brute-force optimum when small and the MST bound
    /// otherwise; hosts compare against the bound over `d_H`.
    pub fn gamma_reference(&self, alpha: f64) -> GammaReference {
        match self {
            Instance::Points { .. } => GammaReference::Auto,
            Instance::Host { host, metric } => {
                GammaReference::LowerBound(optimum_lower_bound(host.weights(), metric, alpha))
            }
        }
    }
}

/// Reads a profile from a file, or by name from the instance when the
/// argument is not a path.
pub fn load_profile(instance: &Instance, arg: &str) -> Result<StrategyProfile> {
    let path = Path::new(arg);
    let profile = if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        StrategyProfile::from_json(&text)?
    } else if let Some(p) = instance.named_profile(arg) {
        p.clone()
    } else {
        bail!("{arg:?} is neither a profile file nor a profile stored in the instance")
    };
    if profile.n() != instance.n() {
        bail!("profile has {} agents, instance has {}", profile.n(), instance.n());
    }
    Ok(profile)
}

/// Writes `text` to `out`, or to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// The serde name of a unit enum variant, e.g. `lower_bound`.
pub fn label<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}
