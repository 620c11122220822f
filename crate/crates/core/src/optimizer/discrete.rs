//! Exhaustive search over cached sets whose complement in the SBS-tier
//! library is one consecutive block of files.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{AseVariant, SbsKernel};
use crate::error::Result;
use crate::params::{ContentConfig, NetworkParams};

use super::kkt::{water_fill, Concave};
use super::line_search::mu_interval;
use super::{Ctx, OptimizerConfig};

/// A cached set with its optimized probabilities at a fixed `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub nc_set: Vec<usize>,
    pub t: Vec<f64>,
    pub mu: f64,
    pub objective: f64,
}

/// Every cached set `N2 \ block` with `block` a run of consecutive files
/// (possibly empty) and at least `C2` files left, grouped by size, largest
/// first.
pub fn candidate_sets(content: &ContentConfig) -> Vec<Vec<usize>> {
    let files: Vec<usize> = content.tier2_files().collect();
    let n2 = files.len();
    let mut out = vec![files.clone()];
    for nb in 1..=n2.saturating_sub(content.c2) {
        for start in 0..=n2 - nb {
            out.push(files[..start].iter().chain(&files[start + nb..]).copied().collect());
        }
    }
    out
}

/// The admissible IN coefficient closest to `mu` for a cached set of `nc`
/// files.
pub(crate) fn clamp_mu(ctx: &Ctx<'_>, nc: usize, mu: f64) -> f64 {
    mu.min(mu_interval(ctx.net.m2, ctx.net.u2, nc, ctx.content.c2).1)
}

/// Lower-bound KKT solve for one cached set under a prepared kernel.
pub(crate) fn solve_lower(ctx: &Ctx<'_>, kernel: &SbsKernel, nc_set: &[usize], cfg: &OptimizerConfig) -> Result<(Vec<f64>, f64)> {
    let a = ctx.popularity(nc_set);
    let phi = Concave::new(kernel.lower_terms())?;
    let t = water_fill(phi, &a, &vec![0.0; a.len()], ctx.content.c2, cfg.bisect_tol, None)?.t;
    let value = ctx.ase(kernel, nc_set, &t, AseVariant::Lower)?;
    Ok((t, value))
}

/// Scores every candidate set at `μ` (clamped per set to its admissible
/// interval) with `solve`, in candidate order.
pub(crate) fn score_all<F>(ctx: &Ctx<'_>, mu: f64, solve: F) -> Result<Vec<Candidate>>
where
    F: Fn(&SbsKernel, &[usize]) -> Result<(Vec<f64>, f64)> + Sync,
{
    let sets = candidate_sets(ctx.content);
    // one kernel per cached-set size
    let mut groups: Vec<(usize, Vec<&Vec<usize>>)> = Vec::new();
    for s in &sets {
        match groups.last_mut() {
            Some((nc, g)) if *nc == s.len() => g.push(s),
            _ => groups.push((s.len(), vec![s])),
        }
    }
    let scored: Vec<Vec<Candidate>> = groups
        .par_iter()
        .map(|(nc, group)| {
            let mu_c = clamp_mu(ctx, *nc, mu);
            let kernel = ctx.kernel(*nc, mu_c)?;
            group
                .iter()
                .map(|set| {
                    let (t, objective) = solve(&kernel, set)?;
                    Ok(Candidate { nc_set: (*set).clone(), t, mu: mu_c, objective })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(scored.into_iter().flatten().collect())
}

/// Whether `c` beats `best`: higher objective, ties to the lexicographically
/// smallest set.
pub(crate) fn beats(c: &Candidate, best: Option<&Candidate>) -> bool {
    match best {
        None => true,
        Some(b) => c.objective > b.objective || (c.objective == b.objective && c.nc_set < b.nc_set),
    }
}

pub(crate) fn best_of(cands: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for c in cands {
        if beats(&c, best.as_ref()) {
            best = Some(c);
        }
    }
    best
}

/// [`score_all`] reduced to its best candidate.
pub(crate) fn enumerate_with<F>(ctx: &Ctx<'_>, mu: f64, solve: F) -> Result<Candidate>
where
    F: Fn(&SbsKernel, &[usize]) -> Result<(Vec<f64>, f64)> + Sync,
{
    Ok(best_of(score_all(ctx, mu, solve)?).expect("the full SBS-tier library is always a candidate"))
}

/// Best cached set and caching probabilities for the ASE lower bound at a
/// fixed `μ`.
pub fn discrete_enumerate(net: &NetworkParams, content: &ContentConfig, mu: f64, cfg: &OptimizerConfig) -> Result<Candidate> {
    let ctx = Ctx::new(net, content)?;
    enumerate_with(&ctx, mu, |kernel, set| solve_lower(&ctx, kernel, set, cfg))
}

/// Lower-bound score of one cached set, evaluated exactly as
/// [`discrete_enumerate`] scores its candidates.
pub fn score_lower(net: &NetworkParams, content: &ContentConfig, nc_set: &[usize], mu: f64, cfg: &OptimizerConfig) -> Result<Candidate> {
    let ctx = Ctx::new(net, content)?;
    let mu_c = clamp_mu(&ctx, nc_set.len(), mu);
    let kernel = ctx.kernel(nc_set.len(), mu_c)?;
    let (t, objective) = solve_lower(&ctx, &kernel, nc_set, cfg)?;
    Ok(Candidate { nc_set: nc_set.to_vec(), t, mu: mu_c, objective })
}
