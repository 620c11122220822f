//! Water-filling solution of separable concave problems over
//! `{0 ≤ T ≤ 1, Σ T = C2}`.

use crate::analytics::{AseVariant, LinFrac};
use crate::error::{Error, Result};
use crate::params::{ContentConfig, NetworkParams};

use super::{fix_sum, Ctx, OptimizerConfig};

/// Sum of positive linear-fractional terms; concave and increasing in `x`
/// on `[0, 1]` when every `r1 ≥ 0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Concave<'a> {
    terms: &'a [LinFrac],
}

impl<'a> Concave<'a> {
    pub fn new(terms: &'a [LinFrac]) -> Result<Self> {
        for t in terms {
            if t.weight < 0.0 || t.r1 < 0.0 || !(t.r2 > 0.0) {
                return Err(Error::DegenerateInput(format!(
                    "objective term is not concave in T: weight={}, r1={}, r2={}",
                    t.weight, t.r1, t.r2
                )));
            }
        }
        Ok(Self { terms })
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    /// First and second derivative.
    #[inline]
    pub fn slopes(&self, x: f64) -> (f64, f64) {
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for t in self.terms {
            let d = t.r1 * x + t.r2;
            let s = t.weight * t.r2 / (d * d);
            d1 += s;
            d2 -= 2.0 * s * t.r1 / d;
        }
        (d1, d2)
    }

    /// Solves `φ'(x) = y` on `[0, 1]` given `φ'(0) > y > φ'(1)`.
    fn invert(&self, y: f64, guess: f64, tol: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x = guess.clamp(0.0, 1.0);
        for _ in 0..200 {
            let (d1, d2) = self.slopes(x);
            let g = d1 - y;
            if g > 0.0 {
                lo = x;
            } else if g < 0.0 {
                hi = x;
            } else {
                return x;
            }
            let mut next = if d2 < 0.0 { x - g / d2 } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= tol || hi - lo <= tol {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Outcome of a water-filling solve.
#[derive(Debug, Clone, PartialEq)]
pub struct KktPoint {
    pub t: Vec<f64>,
    /// Multiplier of the sum constraint, in units of the objective.
    pub nu: f64,
}

/// Maximizes `Σ_n a_n (φ(T_n) - s_n T_n)` subject to the box and
/// `Σ T_n = c2`.
pub(crate) fn water_fill(
    phi: Concave<'_>,
    a: &[f64],
    shift: &[f64],
    c2: usize,
    tol: f64,
    warm: Option<&KktPoint>,
) -> Result<KktPoint> {
    let nc = a.len();
    if nc < c2 {
        return Err(Error::InfeasibleSum { lo: 0.0, hi: nc as f64, target: c2 as f64 });
    }
    let (f0, _) = phi.slopes(0.0);
    let (f1, _) = phi.slopes(1.0);
    if nc == c2 {
        let nu = (0..nc).map(|n| a[n] * (f1 - shift[n])).fold(f64::INFINITY, f64::min);
        return Ok(KktPoint { t: vec![1.0; nc], nu });
    }
    let root_tol = (tol * 1e-6).max(1e-15);
    let mut guess: Vec<f64> = warm.map(|w| w.t.clone()).unwrap_or_else(|| vec![c2 as f64 / nc as f64; nc]);

    let alloc = |nu: f64, guess: &mut [f64]| -> f64 {
        let mut sum = 0.0;
        for n in 0..nc {
            let v = if a[n] == 0.0 {
                // flat coordinate; filled last by `fix_sum`
                if nu < 0.0 { 1.0 } else { 0.0 }
            } else if a[n] * (f0 - shift[n]) <= nu {
                0.0
            } else if a[n] * (f1 - shift[n]) >= nu {
                1.0
            } else {
                phi.invert(shift[n] + nu / a[n], guess[n], root_tol)
            };
            guess[n] = v;
            sum += v;
        }
        sum
    };

    let target = c2 as f64;
    let mut lo = (0..nc).map(|n| a[n] * (f1 - shift[n])).fold(f64::INFINITY, f64::min);
    let mut hi = (0..nc).map(|n| a[n] * (f0 - shift[n])).fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::DegenerateInput("non-finite marginal utility".into()));
    }
    let mut f_lo = alloc(lo, &mut guess) - target;
    let mut f_hi = alloc(hi, &mut guess) - target;
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::InfeasibleSum { lo: f_hi + target, hi: f_lo + target, target });
    }
    if let Some(w) = warm.filter(|w| w.nu > lo && w.nu < hi) {
        // shrink the bracket around the previous multiplier
        let mut step = 1e-3 * w.nu.abs().max(1e-3 * (hi - lo));
        let f = alloc(w.nu, &mut guess) - target;
        if f == 0.0 {
            lo = w.nu;
            hi = w.nu;
        } else if f > 0.0 {
            (lo, f_lo) = (w.nu, f);
            loop {
                let probe = lo + step;
                if probe >= hi {
                    break;
                }
                let fp = alloc(probe, &mut guess) - target;
                if fp <= 0.0 {
                    (hi, f_hi) = (probe, fp);
                    break;
                }
                (lo, f_lo) = (probe, fp);
                step *= 4.0;
            }
        } else {
            (hi, f_hi) = (w.nu, f);
            loop {
                let probe = hi - step;
                if probe <= lo {
                    break;
                }
                let fp = alloc(probe, &mut guess) - target;
                if fp >= 0.0 {
                    (lo, f_lo) = (probe, fp);
                    break;
                }
                (hi, f_hi) = (probe, fp);
                step *= 4.0;
            }
        }
    }

    // Illinois-modified regula falsi on the decreasing allocation sum
    let mut nu = 0.5 * (lo + hi);
    let mut side = 0i8;
    let mut resid = f64::INFINITY;
    for _ in 0..300 {
        let cand = if f_lo - f_hi > 0.0 { (lo * (-f_hi) + hi * f_lo) / (f_lo - f_hi) } else { 0.5 * (lo + hi) };
        nu = if cand > lo && cand < hi { cand } else { 0.5 * (lo + hi) };
        resid = alloc(nu, &mut guess) - target;
        if resid.abs() <= 1e-13 * target || hi - lo <= tol * nu.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if resid > 0.0 {
            lo = nu;
            f_lo = resid;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = nu;
            f_hi = resid;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
    }

    let mut t = guess;
    // first-order shift of the multiplier to land on the constraint
    if resid != 0.0 {
        let inv: Vec<f64> = (0..nc)
            .map(|n| {
                if t[n] > 0.0 && t[n] < 1.0 && a[n] > 0.0 {
                    1.0 / (a[n] * phi.slopes(t[n]).1)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = inv.iter().sum();
        if total < 0.0 {
            let dnu = resid / total;
            for n in 0..nc {
                t[n] = (t[n] - dnu * inv[n]).clamp(0.0, 1.0);
            }
            nu += dnu;
        }
    }
    fix_sum(&mut t, target);
    Ok(KktPoint { t, nu })
}

/// Caching probabilities maximizing the ASE lower bound for a fixed cached
/// set and IN coefficient.
pub fn kkt_continuous(
    net: &NetworkParams,
    content: &ContentConfig,
    nc_set: &[usize],
    mu: f64,
    cfg: &OptimizerConfig,
) -> Result<Vec<f64>> {
    let ctx = Ctx::new(net, content)?;
    let kernel = ctx.kernel(nc_set.len(), mu)?;
    let terms = kernel.terms(AseVariant::Lower).expect("bound variant");
    let a = ctx.popularity(nc_set);
    let zero = vec![0.0; a.len()];
    Ok(water_fill(Concave::new(terms)?, &a, &zero, content.c2, cfg.bisect_tol, None)?.t)
}

/// `a_n φ'(T_n)` of the lower-bound objective, per unit SBS-tier scale; at a
/// KKT point it is the same for every interior coordinate.
pub fn lower_marginals(net: &NetworkParams, content: &ContentConfig, nc_set: &[usize], t: &[f64], mu: f64) -> Result<Vec<f64>> {
    let ctx = Ctx::new(net, content)?;
    let kernel = ctx.kernel(nc_set.len(), mu)?;
    let phi = Concave::new(kernel.lower_terms())?;
    Ok(nc_set.iter().zip(t).map(|(&i, &x)| content.popularity[i] * phi.slopes(x).0).collect())
}
