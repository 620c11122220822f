//! Reference placements: most-popular caching and uniform distributed
//! caching, each with its best IN coefficient.

use crate::analytics::AseVariant;
use crate::error::{invalid, Result};
use crate::params::{ContentConfig, NetworkParams};

use super::line_search::search_mu;
use super::{Ctx, OptimizerConfig, Solution};

fn finish(ctx: &Ctx<'_>, nc_set: Vec<usize>, t: Vec<f64>, cfg: &OptimizerConfig) -> Result<Solution> {
    cfg.validate()?;
    let (mu, value) = search_mu(ctx, &nc_set, &t, AseVariant::Lower, cfg)?;
    ctx.solution(nc_set, t, mu, AseVariant::Lower, value, vec![value])
}

/// Every SBS stores the `C2` most popular SBS-tier files.
pub fn baseline_mpc(net: &NetworkParams, content: &ContentConfig, cfg: &OptimizerConfig) -> Result<Solution> {
    let ctx = Ctx::new(net, content)?;
    if content.n2() < content.c2 {
        return Err(invalid("MPC needs N2 >= C2"));
    }
    let nc_set: Vec<usize> = content.tier2_files().take(content.c2).collect();
    let t = vec![1.0; nc_set.len()];
    finish(&ctx, nc_set, t, cfg)
}

/// The `Cb` least popular SBS-tier files go to backhaul; the rest are cached
/// with equal probability.
pub fn baseline_udc(net: &NetworkParams, content: &ContentConfig, cfg: &OptimizerConfig) -> Result<Solution> {
    let ctx = Ctx::new(net, content)?;
    let keep = content.n2().saturating_sub(content.cb);
    if keep < content.c2 {
        return Err(invalid("UDC needs N2 - Cb >= C2"));
    }
    let nc_set: Vec<usize> = content.tier2_files().take(keep).collect();
    let t = vec![content.c2 as f64 / keep as f64; keep];
    finish(&ctx, nc_set, t, cfg)
}
