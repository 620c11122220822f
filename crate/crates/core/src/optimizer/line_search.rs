//! One-dimensional search over the IN coefficient.

use crate::analytics::AseVariant;
use crate::error::Result;
use crate::params::{ContentConfig, NetworkParams};

use super::{Ctx, OptimizerConfig};

/// Admissible IN coefficients `[0, μ_max]`, chosen so that the mean request
/// load does not exceed the spare antennas `M2 - U2`.
pub fn mu_interval(m2: u32, u2: u32, nc: usize, c2: usize) -> (f64, f64) {
    let da = m2 as f64 / u2 as f64;
    let df = nc as f64 / c2 as f64;
    let hi = if da >= df { (da / df).sqrt() } else { ((da - 1.0) / (df - 1.0)).sqrt() };
    (0.0, hi)
}

/// Relative spread under which an objective is treated as flat in `μ`.
const FLAT: f64 = 1e-12;

/// Best `μ` for a fixed policy under `variant`, with its objective value.
pub(crate) fn search_mu(ctx: &Ctx<'_>, nc_set: &[usize], t: &[f64], variant: AseVariant, cfg: &OptimizerConfig) -> Result<(f64, f64)> {
    let (lo, hi) = mu_interval(ctx.net.m2, ctx.net.u2, nc_set.len(), ctx.content.c2);
    let eval = |mu: f64| -> Result<f64> {
        let kernel = ctx.kernel(nc_set.len(), mu)?;
        ctx.ase(&kernel, nc_set, t, variant)
    };
    if hi <= lo {
        return Ok((lo, eval(lo)?));
    }
    let n = cfg.mu_grid;
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let values = grid.iter().map(|&m| eval(m)).collect::<Result<Vec<f64>>>()?;
    let (mut best_k, mut best) = (0, values[0]);
    let mut worst = values[0];
    for (k, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_k = k;
        }
        worst = worst.min(v);
    }
    if best - worst <= FLAT * best.abs() {
        let mid = 0.5 * (lo + hi);
        return Ok((mid, eval(mid)?));
    }

    // golden-section refinement between the neighbours of the best point
    let mut a = grid[best_k.saturating_sub(1)];
    let mut b = grid[(best_k + 1).min(n - 1)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > cfg.golden_tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = eval(x2)?;
        }
    }
    let (mut mu, mut val) = (grid[best_k], best);
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > val {
            mu = x;
            val = f;
        }
    }
    Ok((mu, val))
}

/// IN coefficient maximizing the ASE lower bound for a fixed caching policy.
pub fn mu_line_search(
    net: &NetworkParams,
    content: &ContentConfig,
    nc_set: &[usize],
    t: &[f64],
    cfg: &OptimizerConfig,
) -> Result<f64> {
    let ctx = Ctx::new(net, content)?;
    Ok(search_mu(&ctx, nc_set, t, AseVariant::Lower, cfg)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_branches() {
        assert_eq!(mu_interval(6, 2, 6, 2), (0.0, 1.0));
        let (_, hi) = mu_interval(16, 4, 20, 10);
        assert!((hi - 2f64.sqrt()).abs() < 1e-15);
        let (_, hi) = mu_interval(6, 2, 12, 2);
        assert!((hi - (2.0f64 / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flat_objective_returns_midpoint() {
        let mut net = NetworkParams::validation_defaults();
        net.u2 = net.m2;
        net.u1 = net.m1;
        let content = ContentConfig::validation_defaults();
        // N_c = C2, so the admissible interval is [0, 1]
        let nc_set = vec![4, 5, 6];
        let mu = mu_line_search(&net, &content, &nc_set, &[1.0; 3], &OptimizerConfig::default()).unwrap();
        assert_eq!(mu, 0.5);
    }
}
