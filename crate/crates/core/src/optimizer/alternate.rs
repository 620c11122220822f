//! Alternating optimization of the cache placement and the IN coefficient.

use crate::analytics::AseVariant;
use crate::error::Result;
use crate::params::{ContentConfig, NetworkParams};

use super::discrete::{enumerate_with, solve_lower, Candidate};
use super::line_search::search_mu;
use super::{Ctx, OptimizerConfig, Solution};

/// Outer loop shared by the lower-bound and upper-bound optimizers. Each
/// iteration re-optimizes the placement at the current `μ` and then `μ` for
/// the current placement; a step is kept only if the objective does not
/// drop. The loop runs from every starting `μ` and the best run is returned
/// with its own trace.
pub(crate) fn alternate_with<E>(ctx: &Ctx<'_>, cfg: &OptimizerConfig, variant: AseVariant, enumerate: E) -> Result<(Candidate, Vec<f64>)>
where
    E: Fn(f64, Option<&Candidate>) -> Result<Candidate>,
{
    cfg.validate()?;
    let mu_cap = (ctx.net.m2 as f64 / ctx.net.u2 as f64).sqrt();
    let mut starts = vec![cfg.mu_init.min(mu_cap)];
    for i in 1..=cfg.mu_starts {
        let mu = mu_cap * i as f64 / cfg.mu_starts as f64;
        if starts.iter().all(|s| (s - mu).abs() > 1e-12) {
            starts.push(mu);
        }
    }
    let mut best: Option<(Candidate, Vec<f64>)> = None;
    for mu in starts {
        let run = alternate_from(ctx, cfg, variant, &enumerate, mu)?;
        if best.as_ref().map_or(true, |(b, _)| run.0.objective > b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

fn alternate_from<E>(ctx: &Ctx<'_>, cfg: &OptimizerConfig, variant: AseVariant, enumerate: &E, mu0: f64) -> Result<(Candidate, Vec<f64>)>
where
    E: Fn(f64, Option<&Candidate>) -> Result<Candidate>,
{
    let mut mu = mu0;
    let mut best: Option<Candidate> = None;
    let mut trace = Vec::new();
    for _ in 0..cfg.alt_max_iters {
        let before = best.as_ref().map_or(0.0, |b| b.objective);
        let cand = enumerate(mu, best.as_ref())?;
        if best.as_ref().map_or(true, |b| b.objective <= cand.objective) {
            best = Some(cand);
        }
        let current = best.as_mut().expect("set above");
        let (mu_new, value) = search_mu(ctx, &current.nc_set, &current.t, variant, cfg)?;
        if current.objective <= value {
            current.mu = mu_new;
            current.objective = value;
        }
        mu = current.mu;
        trace.push(current.objective);
        if trace.len() > 1 && current.objective - before <= cfg.alt_tol * current.objective.abs() {
            break;
        }
    }
    Ok((best.expect("at least one iteration"), trace))
}

/// The proposed policy: a stationary point of the ASE lower bound.
pub fn alternate(net: &NetworkParams, content: &ContentConfig, cfg: &OptimizerConfig) -> Result<Solution> {
    let ctx = Ctx::new(net, content)?;
    let (best, trace) = alternate_with(&ctx, cfg, AseVariant::Lower, |mu, _| {
        enumerate_with(&ctx, mu, |kernel, set| solve_lower(&ctx, kernel, set, cfg))
    })?;
    ctx.solution(best.nc_set, best.t, best.mu, AseVariant::Lower, best.objective, trace)
}
