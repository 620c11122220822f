//! Joint optimization of the cached file set, the caching probabilities and
//! the IN coefficient.
//!
//! The proposed policy maximizes the ASE lower bound by alternating an
//! exhaustive search over consecutive backhaul blocks (with a closed-form KKT
//! solve for the probabilities) and a line search over `μ`. The same outer
//! loop driven by a convex-concave procedure on the ASE upper bound gives the
//! "upper bound" benchmark.

pub mod alternate;
pub mod baselines;
pub mod ccp;
pub mod discrete;
pub mod gpm;
pub mod kkt;
pub mod line_search;

use serde::{Deserialize, Serialize};

use crate::analytics::{self, mbs_served_mass, psi1, q2_with_kernel, tier1_scale, tier2_scale, AseVariant, SbsKernel};
use crate::error::{invalid, Result};
use crate::params::{CachingPolicy, ContentConfig, NetworkParams};

pub use alternate::alternate;
pub use baselines::{baseline_mpc, baseline_udc};
pub use ccp::{ccp_solve, ccp_upper};
pub use discrete::{candidate_sets, discrete_enumerate};
pub use gpm::projected_gradient;
pub use kkt::kkt_continuous;
pub use line_search::{mu_interval, mu_line_search};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Tolerance on the multiplier and on per-file roots.
    pub bisect_tol: f64,
    /// Grid points of the `μ` scan.
    pub mu_grid: usize,
    /// Interval width at which golden-section refinement stops.
    pub golden_tol: f64,
    /// Starting IN coefficient of the alternation, clamped to `[0, √δ_A]`.
    pub mu_init: f64,
    /// Extra alternation runs started at `√δ_A · i / mu_starts`,
    /// `i = 1..=mu_starts`; the best run wins.
    pub mu_starts: usize,
    pub alt_max_iters: usize,
    /// Relative objective improvement below which the alternation stops.
    pub alt_tol: f64,
    pub ccp_max_iters: usize,
    pub ccp_tol: f64,
    pub ccp_restarts: usize,
    /// Seed of the CCP restart points.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            bisect_tol: 1e-8,
            mu_grid: 201,
            golden_tol: 1e-4,
            mu_init: 1.0,
            mu_starts: 4,
            alt_max_iters: 50,
            alt_tol: 1e-6,
            ccp_max_iters: 100,
            ccp_tol: 1e-7,
            ccp_restarts: 5,
            seed: 1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bisect_tol", self.bisect_tol),
            ("golden_tol", self.golden_tol),
            ("alt_tol", self.alt_tol),
            ("ccp_tol", self.ccp_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("mu_grid", self.mu_grid),
            ("alt_max_iters", self.alt_max_iters),
            ("ccp_max_iters", self.ccp_max_iters),
            ("ccp_restarts", self.ccp_restarts),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be at least 1")));
            }
        }
        if self.mu_grid < 2 {
            return Err(invalid("mu_grid must be at least 2"));
        }
        if !(self.mu_init >= 0.0) || !self.mu_init.is_finite() {
            return Err(invalid("mu_init must be finite and >= 0"));
        }
        Ok(())
    }
}

/// An optimized policy with the objective it was optimized for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub nc_set: Vec<usize>,
    pub t: Vec<f64>,
    pub mu: f64,
    /// Which ASE expression `objective` refers to.
    pub variant: AseVariant,
    pub objective: f64,
    /// Exact ASE of the same policy.
    pub ase_exact: f64,
    /// Objective after every accepted step.
    pub trace: Vec<f64>,
}

impl Solution {
    pub fn policy(&self) -> CachingPolicy {
        CachingPolicy::new(self.nc_set.clone(), self.t.clone(), self.mu)
    }
}

/// Per-threshold constants shared by every objective evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Ctx<'a> {
    pub net: &'a NetworkParams,
    pub content: &'a ContentConfig,
    pub psi1: f64,
    pub s1: f64,
    pub s2: f64,
}

impl<'a> Ctx<'a> {
    pub fn new(net: &'a NetworkParams, content: &'a ContentConfig) -> Result<Self> {
        net.validate()?;
        content.validate()?;
        Ok(Self { net, content, psi1: psi1(net)?, s1: tier1_scale(net), s2: tier2_scale(net) })
    }

    pub fn kernel(&self, nc: usize, mu: f64) -> Result<SbsKernel> {
        SbsKernel::new(self.net, nc, self.content.c2, mu)
    }

    pub fn popularity(&self, nc_set: &[usize]) -> Vec<f64> {
        nc_set.iter().map(|&i| self.content.popularity[i]).collect()
    }

    /// ASE of `(nc_set, t)` under `kernel`.
    pub fn ase(&self, kernel: &SbsKernel, nc_set: &[usize], t: &[f64], variant: AseVariant) -> Result<f64> {
        let q1 = analytics::clamp_prob("q1", mbs_served_mass(self.content, nc_set) * self.psi1)?;
        let q2 = q2_with_kernel(kernel, self.content, nc_set, t, variant)?;
        Ok(self.s1 * q1 + self.s2 * q2)
    }

    pub fn solution(&self, nc_set: Vec<usize>, t: Vec<f64>, mu: f64, variant: AseVariant, objective: f64, trace: Vec<f64>) -> Result<Solution> {
        let kernel = self.kernel(nc_set.len(), mu)?;
        let ase_exact = self.ase(&kernel, &nc_set, &t, AseVariant::Exact)?;
        Ok(Solution { nc_set, t, mu, variant, objective, ase_exact, trace })
    }
}

/// `true` when `next` is not below `prev` beyond a relative slack.
pub(crate) fn not_worse(prev: f64, next: f64, slack: f64) -> bool {
    next >= prev - slack * prev.abs().max(f64::MIN_POSITIVE)
}

/// Euclidean projection onto `{0 ≤ x ≤ 1, Σ x = c}` by bisection on the
/// common shift.
pub fn project_box_simplex(y: &[f64], c: f64) -> Vec<f64> {
    let sum_at = |s: f64| y.iter().map(|&v| (v - s).clamp(0.0, 1.0)).sum::<f64>();
    let lo0 = y.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let hi0 = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum_at(mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x: Vec<f64> = y.iter().map(|&v| (v - 0.5 * (lo + hi)).clamp(0.0, 1.0)).collect();
    fix_sum(&mut x, c);
    x
}

/// Removes float residue from `Σ x = c`, keeping `x` inside the box.
pub(crate) fn fix_sum(x: &mut [f64], c: f64) {
    for _ in 0..4 {
        let resid = c - x.iter().sum::<f64>();
        if resid == 0.0 {
            return;
        }
        // the coordinate with the most room in the needed direction
        let idx = if resid > 0.0 {
            (0..x.len()).max_by(|&i, &j| (1.0 - x[i]).total_cmp(&(1.0 - x[j])))
        } else {
            (0..x.len()).max_by(|&i, &j| x[i].total_cmp(&x[j]))
        };
        match idx {
            Some(i) => x[i] = (x[i] + resid).clamp(0.0, 1.0),
            None => return,
        }
    }
}
