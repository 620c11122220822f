//! Convex-concave procedure on the ASE upper bound.
//!
//! Per file the upper bound is `η1(T) - η2(T)` with both parts concave: the
//! odd inclusion-exclusion terms (and the saturated term) form `η1`, the even
//! ones `η2`. Linearizing `η2` at the previous iterate leaves a separable
//! concave problem that the water-filling solver handles exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::analytics::{AseVariant, LinFrac, SbsKernel};
use crate::error::{Error, Result};
use crate::params::{ContentConfig, NetworkParams};

use super::alternate::alternate_with;
use super::discrete::{best_of, clamp_mu, score_all, solve_lower, Candidate};
use super::kkt::{water_fill, Concave, KktPoint};
use super::{not_worse, project_box_simplex, Ctx, OptimizerConfig, Solution};

/// Relative slack of the monotonicity check.
const MONOTONE_SLACK: f64 = 1e-9;
/// Relative tolerance of the screening runs inside the enumeration.
const SCREEN_TOL: f64 = 1e-4;
/// Sets carried from screening to a full-tolerance run.
const SCREEN_KEEP: usize = 8;

struct DcSplit {
    convex_free: Vec<LinFrac>,
    subtracted: Vec<LinFrac>,
}

impl DcSplit {
    fn new(kernel: &SbsKernel) -> Self {
        let mut convex_free = Vec::new();
        let mut subtracted = Vec::new();
        for t in kernel.upper_terms() {
            if t.weight >= 0.0 {
                convex_free.push(*t);
            } else {
                subtracted.push(LinFrac { weight: -t.weight, ..*t });
            }
        }
        Self { convex_free, subtracted }
    }
}

/// Iterates of one CCP run.
#[derive(Debug, Clone, PartialEq)]
pub struct CcpRun {
    pub t: Vec<f64>,
    /// `Σ a_n (η1(T_n) - η2(T_n))` after every iteration, starting with the
    /// initial point.
    pub trace: Vec<f64>,
}

pub(crate) fn ccp_with_kernel(ctx: &Ctx<'_>, kernel: &SbsKernel, nc_set: &[usize], t0: &[f64], cfg: &OptimizerConfig) -> Result<CcpRun> {
    let split = DcSplit::new(kernel);
    let eta1 = Concave::new(&split.convex_free)?;
    let eta2 = Concave::new(&split.subtracted)?;
    let a = ctx.popularity(nc_set);
    let objective = |t: &[f64]| -> f64 { a.iter().zip(t).map(|(&an, &x)| an * (eta1.value(x) - eta2.value(x))).sum() };

    let mut t = t0.to_vec();
    let mut trace = vec![objective(&t)];
    let mut nu = f64::NAN;
    for _ in 0..cfg.ccp_max_iters {
        let shift: Vec<f64> = t.iter().map(|&x| eta2.slopes(x).0).collect();
        let warm = KktPoint { t: t.clone(), nu };
        let point = water_fill(eta1, &a, &shift, ctx.content.c2, cfg.bisect_tol, Some(&warm))?;
        let next = point.t;
        nu = point.nu;
        let prev = *trace.last().expect("nonempty");
        let value = objective(&next);
        if !not_worse(prev, value, MONOTONE_SLACK) {
            return Err(Error::NonMonotoneCcp { prev, next: value });
        }
        t = next;
        trace.push(value);
        if value - prev <= cfg.ccp_tol * value.abs() {
            break;
        }
    }
    Ok(CcpRun { t, trace })
}

/// Runs CCP from `t0` for a fixed cached set and IN coefficient.
pub fn ccp_solve(
    net: &NetworkParams,
    content: &ContentConfig,
    nc_set: &[usize],
    mu: f64,
    t0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<CcpRun> {
    let ctx = Ctx::new(net, content)?;
    let kernel = ctx.kernel(nc_set.len(), mu)?;
    ccp_with_kernel(&ctx, &kernel, nc_set, t0, cfg)
}

/// A random feasible caching vector: a uniform point of the scaled simplex
/// projected onto the box.
pub(crate) fn random_start(nc: usize, c2: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..nc).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    let y: Vec<f64> = e.iter().map(|v| v * c2 as f64 / total).collect();
    project_box_simplex(&y, c2 as f64)
}

/// The upper-bound benchmark: the alternation of [`super::alternate`] with
/// the ASE upper bound as objective and CCP as the continuous solver.
///
/// Each enumeration screens every set with a loose CCP run started from its
/// lower-bound KKT point, then runs the best few to full tolerance. The
/// random restarts are spent on the final set only.
pub fn ccp_upper(net: &NetworkParams, content: &ContentConfig, cfg: &OptimizerConfig) -> Result<Solution> {
    let ctx = Ctx::new(net, content)?;
    let screen_cfg = OptimizerConfig { ccp_tol: cfg.ccp_tol.max(SCREEN_TOL), ..cfg.clone() };
    let enumerate = |mu: f64, _: Option<&Candidate>| -> Result<Candidate> {
        let mut screened = score_all(&ctx, mu, |kernel, set| {
            let (warm, _) = solve_lower(&ctx, kernel, set, cfg)?;
            let run = ccp_with_kernel(&ctx, kernel, set, &warm, &screen_cfg)?;
            Ok((run.t, *run.trace.last().expect("nonempty")))
        })?;
        screened.sort_by(|x, y| y.objective.total_cmp(&x.objective).then_with(|| x.nc_set.cmp(&y.nc_set)));
        screened.truncate(SCREEN_KEEP);
        let refined = screened
            .into_iter()
            .map(|c| {
                let kernel = ctx.kernel(c.nc_set.len(), c.mu)?;
                let run = ccp_with_kernel(&ctx, &kernel, &c.nc_set, &c.t, cfg)?;
                let objective = ctx.ase(&kernel, &c.nc_set, &run.t, AseVariant::Upper)?;
                Ok(Candidate { t: run.t, objective, ..c })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(best_of(refined).expect("at least one candidate"))
    };
    let (mut best, mut trace) = alternate_with(&ctx, cfg, AseVariant::Upper, enumerate)?;

    let mu = clamp_mu(&ctx, best.nc_set.len(), best.mu);
    let kernel = ctx.kernel(best.nc_set.len(), mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.ccp_restarts {
        let t0 = random_start(best.nc_set.len(), content.c2, &mut rng);
        let run = ccp_with_kernel(&ctx, &kernel, &best.nc_set, &t0, cfg)?;
        let value = ctx.ase(&kernel, &best.nc_set, &run.t, AseVariant::Upper)?;
        if value > best.objective {
            best.t = run.t;
            best.objective = value;
            trace.push(value);
        }
    }
    ctx.solution(best.nc_set, best.t, best.mu, AseVariant::Upper, best.objective, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_popularity_fixed_point() {
        let net = NetworkParams::validation_defaults();
        let content = ContentConfig { popularity: vec![1.0 / 12.0; 12], n1: 4, c2: 3, cb: 2, zipf_gamma: None };
        let nc_set: Vec<usize> = (4..10).collect();
        let t0 = [0.9, 0.1, 0.8, 0.2, 0.6, 0.4];
        let cfg = OptimizerConfig { ccp_tol: 1e-15, ccp_max_iters: 1000, ..Default::default() };
        let run = ccp_solve(&net, &content, &nc_set, 0.8, &t0, &cfg).unwrap();
        for x in &run.t {
            assert!((x - 0.5).abs() < 1e-5, "{:?}", run.t);
        }
        assert!(run.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
    }

    #[test]
    fn random_start_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let t = random_start(7, 3, &mut rng);
            assert!((t.iter().sum::<f64>() - 3.0).abs() < 1e-12);
            assert!(t.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}
