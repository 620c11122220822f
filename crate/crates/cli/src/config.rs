//! Experiment configuration: the TOML schema, its resolution into core
//! parameter types and the provenance hash.
//!
//! File indices in configs and outputs are one-based, as in the usual
//! notation `𝒩 = {1, …, N}`; they are shifted to the zero-based indices of
//! the core crate here and back in the writers.

use std::fmt;
use std::path::{Path, PathBuf};

use hetcache_core::params::db_to_linear;
use hetcache_core::{CachingPolicy, ContentConfig, NetworkParams, OptimizerConfig, SimConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analyze,
    Simulate,
    Optimize,
    Sweep,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Analyze => "analyze",
            Mode::Simulate => "simulate",
            Mode::Optimize => "optimize",
            Mode::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Study,
    Validation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Mpc,
    Udc,
    Upper,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Proposed, Method::Mpc, Method::Udc, Method::Upper];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Mpc => "mpc",
            Method::Udc => "udc",
            Method::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    TauDb,
    Tau,
    ZipfGamma,
    Cb,
    U2,
    Mu,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::TauDb => "tau_db",
            Axis::Tau => "tau",
            Axis::ZipfGamma => "zipf_gamma",
            Axis::Cb => "cb",
            Axis::U2 => "u2",
            Axis::Mu => "mu",
        }
    }

    fn integral(self) -> bool {
        matches!(self, Axis::Cb | Axis::U2)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNet {
    preset: Option<Preset>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    lambda_u: Option<f64>,
    m1: Option<u32>,
    m2: Option<u32>,
    u1: Option<u32>,
    u2: Option<u32>,
    p1_dbm: Option<f64>,
    p2_dbm: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    tau: Option<f64>,
    tau_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContent {
    preset: Option<Preset>,
    n: Option<usize>,
    zipf_gamma: Option<f64>,
    popularity: Option<Vec<f64>>,
    n1: Option<usize>,
    c2: Option<usize>,
    cb: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    nc_set: Vec<usize>,
    t: Option<Vec<f64>>,
    mu: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Axis,
    values: Vec<f64>,
    methods: Option<Vec<Method>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    mode: Option<Mode>,
    output_path: Option<PathBuf>,
    #[serde(default)]
    net: RawNet,
    #[serde(default)]
    content: RawContent,
    policy: Option<RawPolicy>,
    sim: Option<SimConfig>,
    opt: Option<OptimizerConfig>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
}

/// A fully resolved experiment. Its JSON form is what the config hash
/// covers; the output directory is deliberately not part of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub mode: Mode,
    pub net: NetworkParams,
    pub content: ContentConfig,
    #[serde(serialize_with = "one_based_policy")]
    pub policy: Option<CachingPolicy>,
    pub sim: SimConfig,
    pub opt: OptimizerConfig,
    pub sweep: Option<Sweep>,
    #[serde(skip)]
    pub output_path: PathBuf,
}

fn one_based_policy<S: serde::Serializer>(p: &Option<CachingPolicy>, s: S) -> Result<S::Ok, S::Error> {
    p.as_ref().map(|p| CachingPolicy { nc_set: p.nc_set.iter().map(|i| i + 1).collect(), ..p.clone() }).serialize(s)
}

/// A schema or validation problem, reported with the offending field.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn check<E: fmt::Display>(path: &str, r: Result<(), E>) -> Result<(), ConfigError> {
    r.map_err(|e| ConfigError(format!("{path}: {e}")))
}

/// Overrides supplied on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn load(path: &Path, mode: Mode, overrides: &Overrides) -> Result<Experiment, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, mode, overrides)
}

pub fn parse(text: &str, mode: Mode, overrides: &Overrides) -> Result<Experiment, ConfigError> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
    if let Some(m) = raw.mode {
        if m != mode {
            return err(format!("mode: config says `{m}` but the `{mode}` subcommand was used"));
        }
    }
    let net = resolve_net(&raw.net)?;
    let content = resolve_content(&raw.content)?;
    let policy = match raw.policy {
        Some(p) => Some(resolve_policy(p, &content)?),
        None if matches!(mode, Mode::Analyze | Mode::Simulate) => {
            return err(format!("policy: a [policy] section is required in {mode} mode"));
        }
        None => None,
    };
    let mut sim = raw.sim.unwrap_or_default();
    let mut opt = raw.opt.unwrap_or_default();
    if let Some(seed) = overrides.seed {
        sim.seed = seed;
        opt.seed = seed;
    }
    check("sim", sim.validate())?;
    check("opt", opt.validate())?;
    let sweep = raw.sweep.map(|s| resolve_sweep(s, mode, &content)).transpose()?;
    if mode == Mode::Sweep && sweep.is_none() {
        return err("sweep: a [sweep] section is required in sweep mode");
    }
    let output_path = overrides.out.clone().or(raw.output_path).unwrap_or_else(|| PathBuf::from("out"));
    Ok(Experiment { mode, net, content, policy, sim, opt, sweep, output_path })
}

fn resolve_net(raw: &RawNet) -> Result<NetworkParams, ConfigError> {
    let mut net = match raw.preset.unwrap_or_default() {
        Preset::Study => NetworkParams::study_defaults(),
        Preset::Validation => NetworkParams::validation_defaults(),
    };
    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(v) = raw.$f { net.$f = v; } )* };
    }
    take!(lambda1, lambda2, lambda_u, m1, m2, u1, u2, p1_dbm, p2_dbm, alpha1, alpha2);
    match (raw.tau, raw.tau_db) {
        (Some(_), Some(_)) => return err("net: give either tau or tau_db, not both"),
        (Some(t), None) => net.tau = t,
        (None, Some(db)) => net.tau = db_to_linear(db),
        (None, None) => {}
    }
    if raw.u1.is_none() && raw.m1.is_some() {
        net.u1 = net.m1;
    }
    check("net", net.validate())?;
    Ok(net)
}

fn resolve_content(raw: &RawContent) -> Result<ContentConfig, ConfigError> {
    let (mut n, mut gamma, mut n1, mut c2, mut cb) = match raw.preset.unwrap_or_default() {
        Preset::Study => (50, 0.4, 20, 10, 3),
        Preset::Validation => (12, 0.8, 4, 3, 2),
    };
    n1 = raw.n1.unwrap_or(n1);
    c2 = raw.c2.unwrap_or(c2);
    cb = raw.cb.unwrap_or(cb);
    let content = match &raw.popularity {
        Some(p) => {
            if raw.n.is_some() || raw.zipf_gamma.is_some() {
                return err("content: popularity excludes n and zipf_gamma");
            }
            ContentConfig { popularity: p.clone(), n1, c2, cb, zipf_gamma: None }
        }
        None => {
            n = raw.n.unwrap_or(n);
            gamma = raw.zipf_gamma.unwrap_or(gamma);
            ContentConfig::zipf(n, gamma, n1, c2, cb).map_err(|e| ConfigError(format!("content: {e}")))?
        }
    };
    check("content", content.validate())?;
    Ok(content)
}

fn resolve_policy(raw: RawPolicy, content: &ContentConfig) -> Result<CachingPolicy, ConfigError> {
    if raw.nc_set.contains(&0) {
        return err("policy.nc_set: file indices are one-based");
    }
    let nc_set: Vec<usize> = raw.nc_set.iter().map(|i| i - 1).collect();
    let policy = match raw.t {
        Some(t) => CachingPolicy::new(nc_set, t, raw.mu),
        None => CachingPolicy::uniform(nc_set, content.c2, raw.mu),
    };
    if !(policy.mu >= 0.0) || !policy.mu.is_finite() {
        return err("policy.mu: must be finite and nonnegative");
    }
    check("policy", policy.validate(content))?;
    Ok(policy)
}

fn resolve_sweep(raw: RawSweep, mode: Mode, content: &ContentConfig) -> Result<Sweep, ConfigError> {
    if raw.values.is_empty() {
        return err("sweep.values: must be nonempty");
    }
    let up = raw.values.windows(2).all(|w| w[1] > w[0]);
    let down = raw.values.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return err("sweep.values: must be strictly monotone");
    }
    if raw.values.iter().any(|v| !v.is_finite()) {
        return err("sweep.values: must be finite");
    }
    if raw.axis.integral() && raw.values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return err(format!("sweep.values: axis {} takes nonnegative integers", raw.axis.name()));
    }
    match (mode, raw.axis) {
        (Mode::Simulate, Axis::Tau | Axis::TauDb) => {}
        (Mode::Simulate, a) => return err(format!("sweep.axis: simulate mode sweeps tau or tau_db only, got {}", a.name())),
        (Mode::Optimize, _) => return err("sweep: optimize mode runs a single point; use the sweep subcommand"),
        (Mode::Sweep, Axis::Mu) => return err("sweep.axis: mu is chosen by the optimizers and cannot be swept"),
        _ => {}
    }
    if raw.axis == Axis::ZipfGamma && content.zipf_gamma.is_none() {
        return err("sweep.axis: zipf_gamma needs a Zipf library, not an explicit popularity vector");
    }
    let methods = raw.methods.unwrap_or_else(|| Method::ALL.to_vec());
    if methods.is_empty() {
        return err("sweep.methods: must be nonempty");
    }
    Ok(Sweep { axis: raw.axis, values: raw.values, methods })
}

impl Experiment {
    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("plain data serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// The experiment with one sweep coordinate applied.
    pub fn at(&self, axis: Axis, value: f64) -> Result<(NetworkParams, ContentConfig, Option<CachingPolicy>), ConfigError> {
        let mut net = self.net.clone();
        let mut content = self.content.clone();
        let mut policy = self.policy.clone();
        match axis {
            Axis::TauDb => net.tau = db_to_linear(value),
            Axis::Tau => net.tau = value,
            Axis::U2 => net.u2 = value as u32,
            Axis::Cb => content.cb = value as usize,
            Axis::ZipfGamma => {
                content = ContentConfig::zipf(content.n(), value, content.n1, content.c2, content.cb)
                    .map_err(|e| ConfigError(format!("sweep: {} = {value}: {e}", axis.name())))?;
            }
            Axis::Mu => {
                if let Some(p) = policy.as_mut() {
                    p.mu = value;
                }
            }
        }
        check(&format!("sweep: {} = {value}: net", axis.name()), net.validate())?;
        Ok((net, content, policy))
    }
}
