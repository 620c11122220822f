//! Projected-gradient ascent on the exact SBS-tier ASE.

use crate::analytics::SbsKernel;
use crate::error::{Error, Result};
use crate::params::{ContentConfig, NetworkParams};

use super::{project_box_simplex, Ctx, OptimizerConfig};

const ARMIJO: f64 = 1e-4;
const MAX_ITERS: usize = 5000;
const MAX_BACKTRACKS: usize = 60;
const FD_STEP: f64 = 1e-6;

fn objective(kernel: &SbsKernel, a: &[f64], t: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (&an, &x) in a.iter().zip(t) {
        s += an * kernel.psi2_exact(x)?;
    }
    Ok(s)
}

/// Central difference of `ψ(T)` at `x`, one-sided against the box.
fn derivative(kernel: &SbsKernel, x: f64, h: f64) -> Result<f64> {
    let lo = (x - h).max(0.0);
    let hi = (x + h).min(1.0);
    Ok((kernel.psi2_exact(hi)? - kernel.psi2_exact(lo)?) / (hi - lo))
}

/// Finite-difference gradient of `Σ a_n Ψ2(T_n)` with step `h`.
pub fn exact_gradient(
    net: &NetworkParams,
    content: &ContentConfig,
    nc_set: &[usize],
    t: &[f64],
    mu: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let ctx = Ctx::new(net, content)?;
    let kernel = ctx.kernel(nc_set.len(), mu)?;
    let a = ctx.popularity(nc_set);
    a.iter().zip(t).map(|(&an, &x)| Ok(an * derivative(&kernel, x, h)?)).collect()
}

/// Stationary caching probabilities of the exact objective for a fixed
/// cached set and IN coefficient, starting from uniform caching.
pub fn projected_gradient(
    net: &NetworkParams,
    content: &ContentConfig,
    nc_set: &[usize],
    mu: f64,
    cfg: &OptimizerConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let ctx = Ctx::new(net, content)?;
    let kernel = ctx.kernel(nc_set.len(), mu)?;
    let a = ctx.popularity(nc_set);
    let c2 = content.c2 as f64;
    let mut t = vec![c2 / nc_set.len() as f64; nc_set.len()];
    let mut f = objective(&kernel, &a, &t)?;
    let mut step = 1.0;
    for _ in 0..MAX_ITERS {
        let g: Vec<f64> = a
            .iter()
            .zip(&t)
            .map(|(&an, &x)| Ok(an * derivative(&kernel, x, FD_STEP)?))
            .collect::<Result<_>>()?;
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 {
            return Ok(t);
        }
        let mut accepted = None;
        let mut s = step;
        for _ in 0..MAX_BACKTRACKS {
            let y: Vec<f64> = t.iter().zip(&g).map(|(x, gi)| x + s * gi).collect();
            let cand = project_box_simplex(&y, c2);
            let ascent: f64 = g.iter().zip(cand.iter().zip(&t)).map(|(gi, (c, x))| gi * (c - x)).sum();
            let fc = objective(&kernel, &a, &cand)?;
            if fc >= f + ARMIJO * ascent {
                accepted = Some((cand, fc));
                break;
            }
            s *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            return Err(Error::MaxIters { iters: MAX_BACKTRACKS });
        };
        let moved = cand.iter().zip(&t).fold(0.0f64, |m, (c, x)| m.max((c - x).abs()));
        t = cand;
        f = fc;
        if moved <= cfg.bisect_tol * 1e-2 {
            return Ok(t);
        }
        step = (2.0 * s).min(1e6);
    }
    Err(Error::MaxIters { iters: MAX_ITERS })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_popularity_stays_uniform() {
        let net = NetworkParams::validation_defaults();
        let content = ContentConfig { popularity: vec![1.0 / 12.0; 12], n1: 4, c2: 3, cb: 2, zipf_gamma: None };
        let nc_set: Vec<usize> = (4..10).collect();
        let t = projected_gradient(&net, &content, &nc_set, 0.8, &OptimizerConfig::default()).unwrap();
        for x in &t {
            assert!((x - 0.5).abs() < 1e-9);
        }
    }
}
