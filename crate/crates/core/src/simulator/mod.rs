//! Stochastic-geometry Monte Carlo of the two-tier network.
//!
//! Each realization draws both PPPs in a square window, places caches,
//! generates users, runs the IN request/grant protocol and then drops a few
//! typical users ("probes") uniformly in the observation region, i.e. the
//! window minus a guard margin. Success probabilities are estimated from the
//! probes; the Θ histogram from the SBSs inside the observation region.

pub mod caching;
pub mod geometry;
pub mod network;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::tier1_scale;
use crate::error::{invalid, Result};
use crate::params::{CachingPolicy, ContentConfig, NetworkParams};

pub use caching::{realize_caches, solve_pi_least_squares, CacheRealization};
pub use geometry::{sample_ppp, GridIndex, Point, Window};
pub use network::{associate_and_serve, associate_sbs_users, count_requests, in_protocol, probe, Layout, Service};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Side of the square map (m).
    pub window_side: f64,
    pub n_realizations: usize,
    pub seed: u64,
    /// Guard band excluded from all statistics (m).
    pub observation_margin: f64,
    /// Typical users evaluated per realization; zero skips the SIR stage.
    pub probes_per_realization: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            window_side: 2000.0,
            n_realizations: 50_000,
            seed: 1,
            observation_margin: 500.0,
            probes_per_realization: 4,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_side > 0.0) || !self.window_side.is_finite() {
            return Err(invalid("window_side must be positive"));
        }
        if self.n_realizations == 0 {
            return Err(invalid("n_realizations must be at least 1"));
        }
        if !(self.observation_margin >= 0.0) || self.observation_margin >= self.window_side / 2.0 {
            return Err(invalid("observation_margin must lie in [0, window_side / 2)"));
        }
        Ok(())
    }

    pub fn window(&self) -> Window {
        Window::square(self.window_side)
    }

    pub fn observation(&self) -> Window {
        self.window().inset(self.observation_margin)
    }
}

/// Monte Carlo estimates at one SIR threshold, with 95% half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub tau: f64,
    pub q1_hat: f64,
    pub q1_half_width: f64,
    pub q2_hat: f64,
    pub q2_half_width: f64,
    pub ase_hat: f64,
    pub ase_half_width: f64,
    /// Empirical PMF of the IN request count; index is the count.
    pub theta_hist: Vec<f64>,
    /// Typical-user trials that entered the estimates.
    pub n_effective: usize,
    /// Users or typical-user trials dropped because no server existed.
    pub n_dropped: usize,
    pub n_realizations: usize,
}

impl SimEstimate {
    pub fn stp(&self) -> f64 {
        self.q1_hat + self.q2_hat
    }
}

/// Raw per-realization tallies.
#[derive(Debug, Clone, Default)]
struct Tally {
    theta_hist: Vec<u64>,
    /// Probe trials per cached file.
    trials2: Vec<u32>,
    /// Successes per (threshold, cached file).
    succ2: Vec<u32>,
    trials1: u32,
    /// Backhaul-weighted MBS successes per threshold.
    y1: Vec<f64>,
    dropped: usize,
}

const Z95: f64 = 1.959_963_984_540_054;

fn realization_rngs(seed: u64, index: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut a = ChaCha8Rng::seed_from_u64(seed);
    a.set_stream(2 * index as u64);
    let mut b = ChaCha8Rng::seed_from_u64(seed);
    b.set_stream(2 * index as u64 + 1);
    (a, b)
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    net: &NetworkParams,
    content: &ContentConfig,
    policy: &CachingPolicy,
    sim: &SimConfig,
    taus: &[f64],
    index: usize,
    scratch: &mut network::ProbeScratch,
) -> Result<Tally> {
    let (mut rng, mut rng_in) = realization_rngs(sim.seed, index);
    let window = sim.window();
    let obs = sim.observation();
    let layout = Layout::sample(net, policy, content.c2, window, &mut rng)?;
    let service = if sim.probes_per_realization > 0 {
        associate_and_serve(&layout, net, content, policy, &mut rng)
    } else {
        network::associate_sbs_users(&layout, net, content, policy, &mut rng)
    };
    let theta = count_requests(&layout, &service.served, policy.mu);

    let nc = policy.nc();
    let mut tally = Tally {
        trials2: vec![0; nc],
        succ2: vec![0; nc * taus.len()],
        y1: vec![0.0; taus.len()],
        dropped: service.dropped,
        ..Default::default()
    };
    for (s, p) in layout.sbs.iter().enumerate() {
        if obs.contains(p) {
            let th = theta[s] as usize;
            if tally.theta_hist.len() <= th {
                tally.theta_hist.resize(th + 1, 0);
            }
            tally.theta_hist[th] += 1;
        }
    }

    for _ in 0..sim.probes_per_realization {
        let pos = obs.sample_uniform(&mut rng);
        let out = probe(&layout, &service, &theta, net, content, policy, pos, &mut rng, &mut rng_in, scratch);
        match out.sir_mbs {
            Some(s1) => {
                tally.trials1 += 1;
                for (k, &tau) in taus.iter().enumerate() {
                    if s1 >= tau {
                        tally.y1[k] += out.mbs_weight;
                    }
                }
            }
            None => tally.dropped += 1,
        }
        for (j, s2) in out.sir_sbs.iter().enumerate() {
            match s2 {
                Some(s2) => {
                    tally.trials2[j] += 1;
                    for (k, &tau) in taus.iter().enumerate() {
                        if *s2 >= tau {
                            tally.succ2[k * nc + j] += 1;
                        }
                    }
                }
                None => tally.dropped += 1,
            }
        }
    }
    Ok(tally)
}

/// Runs the simulation once and reports estimates at every threshold in
/// `taus`. The threshold stored in `net` is ignored.
pub fn estimate_many(
    net: &NetworkParams,
    content: &ContentConfig,
    policy: &CachingPolicy,
    sim: &SimConfig,
    taus: &[f64],
) -> Result<Vec<SimEstimate>> {
    net.validate()?;
    content.validate()?;
    policy.validate(content)?;
    sim.validate()?;
    if taus.iter().any(|&t| !(t > 0.0)) {
        return Err(invalid("thresholds must be positive"));
    }
    let tallies: Vec<Tally> = (0..sim.n_realizations)
        .into_par_iter()
        .map_init(network::ProbeScratch::default, |scratch, i| run_one(net, content, policy, sim, taus, i, scratch))
        .collect::<Result<_>>()?;
    Ok(aggregate(net, content, policy, sim, taus, &tallies))
}

/// Single-threshold convenience wrapper around [`estimate_many`].
pub fn estimate(net: &NetworkParams, content: &ContentConfig, policy: &CachingPolicy, sim: &SimConfig) -> Result<SimEstimate> {
    Ok(estimate_many(net, content, policy, sim, &[net.tau])?.remove(0))
}

fn aggregate(
    net: &NetworkParams,
    content: &ContentConfig,
    policy: &CachingPolicy,
    sim: &SimConfig,
    taus: &[f64],
    tallies: &[Tally],
) -> Vec<SimEstimate> {
    let nc = policy.nc();
    let r = tallies.len() as f64;

    let mut hist = Vec::<u64>::new();
    for t in tallies {
        if hist.len() < t.theta_hist.len() {
            hist.resize(t.theta_hist.len(), 0);
        }
        for (h, &c) in hist.iter_mut().zip(&t.theta_hist) {
            *h += c;
        }
    }
    let total: u64 = hist.iter().sum();
    let theta_hist: Vec<f64> = hist.iter().map(|&c| c as f64 / total.max(1) as f64).collect();

    let trials2: Vec<f64> = (0..nc).map(|j| tallies.iter().map(|t| t.trials2[j] as f64).sum()).collect();
    let trials1: f64 = tallies.iter().map(|t| t.trials1 as f64).sum();
    let dropped: usize = tallies.iter().map(|t| t.dropped).sum();
    let n_effective = trials1 as usize + trials2.iter().sum::<f64>() as usize;
    let a: Vec<f64> = policy.nc_set.iter().map(|&i| content.popularity[i]).collect();

    taus.iter()
        .enumerate()
        .map(|(k, &tau)| {
            let net_k = net.with_tau(tau);
            let c1 = tier1_scale(&net_k);
            let c2 = crate::analytics::tier2_scale(&net_k);
            // ratio estimators and their delta-method residuals
            let p2: Vec<f64> = (0..nc)
                .map(|j| {
                    let s: f64 = tallies.iter().map(|t| t.succ2[k * nc + j] as f64).sum();
                    if trials2[j] > 0.0 { s / trials2[j] } else { 0.0 }
                })
                .collect();
            let q2_hat: f64 = a.iter().zip(&p2).map(|(a, p)| a * p).sum();
            let y1_sum: f64 = tallies.iter().map(|t| t.y1[k]).sum();
            let q1_hat = if trials1 > 0.0 { y1_sum / trials1 } else { 0.0 };

            let (mut v1, mut v2, mut v) = (0.0, 0.0, 0.0);
            for t in tallies {
                let d1 = if trials1 > 0.0 { (t.y1[k] - q1_hat * t.trials1 as f64) / trials1 } else { 0.0 };
                let mut d2 = 0.0;
                for j in 0..nc {
                    if trials2[j] > 0.0 {
                        d2 += a[j] * (t.succ2[k * nc + j] as f64 - p2[j] * t.trials2[j] as f64) / trials2[j];
                    }
                }
                v1 += d1 * d1;
                v2 += d2 * d2;
                let d = c1 * d1 + c2 * d2;
                v += d * d;
            }
            let corr = if r > 1.0 { r / (r - 1.0) } else { 0.0 };
            let hw = |var: f64| Z95 * (var * corr).sqrt();
            SimEstimate {
                tau,
                q1_hat,
                q1_half_width: hw(v1),
                q2_hat,
                q2_half_width: hw(v2),
                ase_hat: c1 * q1_hat + c2 * q2_hat,
                ase_half_width: hw(v),
                theta_hist: theta_hist.clone(),
                n_effective,
                n_dropped: dropped,
                n_realizations: sim.n_realizations,
            }
        })
        .collect()
}

/// Total-variation distance between an empirical PMF and a reference PMF
/// given as a function of the count.
pub fn total_variation(empirical: &[f64], reference: impl Fn(u32) -> f64) -> f64 {
    let mut ref_mass = 0.0;
    let mut dist = 0.0;
    for (k, &e) in empirical.iter().enumerate() {
        let r = reference(k as u32);
        ref_mass += r;
        dist += (e - r).abs();
    }
    // reference mass beyond the empirical support
    0.5 * (dist + (1.0 - ref_mass).max(0.0))
}
