//! Special functions used by the coverage analysis.
//!
//! Everything here works on real arguments only. The Gauss hypergeometric
//! function is only ever needed at negative real arguments `-x`, which lets
//! the implementation get away with three regimes:
//!
//! * `x < 0.5`: the defining power series,
//! * `0.5 <= x <= 2`: the Pfaff transformation
//!   `2F1(a,b;c;-x) = (1+x)^(-b) 2F1(c-a,b;c;x/(1+x))`,
//! * `x > 2`: the `1/x` connection formula, whose two series are evaluated at
//!   `-1/x` with `1/x < 0.5`.
//!
//! The composite functions `capital_f`, `capital_g` and `f_tilde` carry the
//! tier parameters `(U, alpha)` explicitly so that both tiers can share them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Convergence control for the series and continued fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecFunConfig {
    pub series_tol: f64,
    pub max_terms: usize,
}

impl Default for SpecFunConfig {
    fn default() -> Self {
        Self {
            series_tol: 1e-12,
            max_terms: 10_000,
        }
    }
}

impl SpecFunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_tol > 0.0) {
            return Err(invalid("series_tol must be positive"));
        }
        if self.max_terms == 0 {
            return Err(invalid("max_terms must be at least 1"));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `Γ(x)` for any real `x` that is not a nonpositive integer.
pub fn gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    if x == x.floor() && x <= 171.0 {
        // exact factorial for small integers
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return acc;
    }
    ln_gamma(x).exp()
}

/// Euler Beta function `B(x, y)` for positive arguments.
pub fn beta(x: f64, y: f64) -> f64 {
    (ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp()
}

/// Rising factorial `(u)_m = u (u+1) ... (u+m-1)`.
pub fn pochhammer(u: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, k| acc * (u + k as f64))
}

/// Regularized lower incomplete gamma `γ(s, x) / Γ(s)`.
pub fn lower_inc_gamma_reg(s: f64, x: f64) -> Result<f64> {
    lower_inc_gamma_reg_with(s, x, &SpecFunConfig::default())
}

pub fn lower_inc_gamma_reg_with(s: f64, x: f64, cfg: &SpecFunConfig) -> Result<f64> {
    if !(s > 0.0) {
        return Err(invalid(format!("incomplete gamma shape must be positive, got {s}")));
    }
    if !(x >= 0.0) {
        return Err(invalid(format!("incomplete gamma argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let tol = cfg.series_tol.min(1e-14);
    let log_prefactor = s * x.ln() - x - ln_gamma(s);
    if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut denom = s;
        for _ in 0..cfg.max_terms {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * tol {
                return Ok((sum.ln() + log_prefactor).exp().clamp(0.0, 1.0));
            }
        }
        Err(Error::NonConvergence {
            what: "incomplete gamma series",
            terms: cfg.max_terms,
        })
    } else {
        // modified Lentz on the upper-tail continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=cfg.max_terms {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < tol {
                let upper = (h.ln() + log_prefactor).exp();
                return Ok((1.0 - upper).clamp(0.0, 1.0));
            }
        }
        Err(Error::NonConvergence {
            what: "incomplete gamma continued fraction",
            terms: cfg.max_terms,
        })
    }
}

/// Defining power series of `2F1(a, b; c; z)` for `|z| < 1`, optionally
/// without its leading unit term.
fn series(a: f64, b: f64, c: f64, z: f64, skip_first: bool, cfg: &SpecFunConfig) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = if skip_first { 0.0 } else { 1.0 };
    let mut small_run = 0;
    for n in 0..cfg.max_terms {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() <= cfg.series_tol * 1e-3 * sum.abs() {
            // two consecutive small terms guard against accidental near-zeros
            small_run += 1;
            if small_run >= 2 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "2F1 power series",
        terms: cfg.max_terms,
    })
}

/// Direct power series for `2F1(a, b; c; -x)`, valid for `0 <= x < 1`.
pub fn gauss_2f1_neg_series(a: f64, b: f64, c: f64, x: f64, cfg: &SpecFunConfig) -> Result<f64> {
    check_2f1(c, x)?;
    if x >= 1.0 {
        return Err(invalid("direct 2F1 series needs x < 1"));
    }
    series(a, b, c, -x, false, cfg)
}

/// Pfaff-transformed evaluation of `2F1(a, b; c; -x)`, valid for any `x >= 0`
/// with slow convergence as `x` grows.
pub fn gauss_2f1_neg_pfaff(a: f64, b: f64, c: f64, x: f64, cfg: &SpecFunConfig) -> Result<f64> {
    check_2f1(c, x)?;
    let z = x / (1.0 + x);
    Ok((1.0 + x).powf(-b) * series(c - a, b, c, z, false, cfg)?)
}

fn check_2f1(c: f64, x: f64) -> Result<()> {
    if is_nonpositive_integer(c) {
        return Err(invalid(format!("2F1 parameter c = {c} is a nonpositive integer")));
    }
    if !(x >= 0.0) || x.is_infinite() {
        return Err(invalid(format!("2F1 argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

/// `x^p * 2F1(a, b; c; -x)`, with the power folded into the large-`x`
/// branch so that huge arguments do not overflow.
fn scaled_2f1_neg(a: f64, b: f64, c: f64, x: f64, p: f64, cfg: &SpecFunConfig) -> Result<f64> {
    check_2f1(c, x)?;
    if x == 0.0 {
        return Ok(if p == 0.0 { 1.0 } else { 0.0 });
    }
    let ab = a - b;
    let connection_ok = ab != ab.round();
    if x < 0.5 {
        Ok(x.powf(p) * series(a, b, c, -x, false, cfg)?)
    } else if x <= 2.0 || !connection_ok {
        Ok(x.powf(p) * gauss_2f1_neg_pfaff(a, b, c, x, cfg)?)
    } else {
        let inv = 1.0 / x;
        let mut total = 0.0;
        // a term drops out when 1/Γ(.) vanishes at a pole
        if !is_nonpositive_integer(c - a) && !is_nonpositive_integer(b) {
            let coeff = gamma(c) * gamma(b - a) / (gamma(b) * gamma(c - a));
            let s = series(a, a - c + 1.0, a - b + 1.0, -inv, false, cfg)?;
            total += coeff * x.powf(p - a) * s;
        }
        if !is_nonpositive_integer(c - b) && !is_nonpositive_integer(a) {
            let coeff = gamma(c) * gamma(a - b) / (gamma(a) * gamma(c - b));
            let s = series(b, b - c + 1.0, b - a + 1.0, -inv, false, cfg)?;
            total += coeff * x.powf(p - b) * s;
        }
        Ok(total)
    }
}

/// `2F1(a, b; c; -x)` for `x >= 0`.
pub fn gauss_2f1_neg(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    gauss_2f1_neg_with(a, b, c, x, &SpecFunConfig::default())
}

pub fn gauss_2f1_neg_with(a: f64, b: f64, c: f64, x: f64, cfg: &SpecFunConfig) -> Result<f64> {
    scaled_2f1_neg(a, b, c, x, 0.0, cfg)
}

fn check_tier(u: u32, alpha: f64) -> Result<()> {
    if u == 0 {
        return Err(invalid("U must be a positive integer"));
    }
    if !(alpha > 2.0) {
        return Err(invalid(format!("path-loss exponent must exceed 2, got {alpha}")));
    }
    Ok(())
}

/// `F(x) = 2F1(-2/α, U; 1-2/α; -x) - 1`.
///
/// Equals `2 ∫_1^∞ (1 - (1 + x v^{-α})^{-U}) v dv`, the normalized interference
/// exponent of a PPP outside the unit disc.
pub fn capital_f(x: f64, u: u32, alpha: f64) -> Result<f64> {
    capital_f_with(x, u, alpha, &SpecFunConfig::default())
}

pub fn capital_f_with(x: f64, u: u32, alpha: f64, cfg: &SpecFunConfig) -> Result<f64> {
    check_tier(u, alpha)?;
    let delta = 2.0 / alpha;
    let (a, b, c) = (-delta, u as f64, 1.0 - delta);
    if x < 0.5 {
        check_2f1(c, x)?;
        // drop the unit term to keep relative accuracy for small x
        return Ok(series(a, b, c, -x, true, cfg)?.max(0.0));
    }
    Ok((scaled_2f1_neg(a, b, c, x, 0.0, cfg)? - 1.0).max(0.0))
}

/// `G(x) = Γ(1-2/α) Γ(U+2/α) / Γ(U) · x^{2/α}`, the whole-plane limit
/// `lim_{r→0} r² F(x r^{-α})`.
pub fn capital_g(x: f64, u: u32, alpha: f64) -> Result<f64> {
    check_tier(u, alpha)?;
    if !(x >= 0.0) {
        return Err(invalid(format!("G argument must be >= 0, got {x}")));
    }
    let delta = 2.0 / alpha;
    let u = u as f64;
    let coeff = (ln_gamma(1.0 - delta) + ln_gamma(u + delta) - ln_gamma(u)).exp();
    Ok(coeff * x.powf(delta))
}

/// `F̃_k(x) = x^k / (αk - 2) · 2F1(U+k, k-2/α; k-2/α+1; -x)`.
pub fn f_tilde(x: f64, k: u32, u: u32, alpha: f64) -> Result<f64> {
    f_tilde_with(x, k, u, alpha, &SpecFunConfig::default())
}

pub fn f_tilde_with(x: f64, k: u32, u: u32, alpha: f64, cfg: &SpecFunConfig) -> Result<f64> {
    check_tier(u, alpha)?;
    if k == 0 {
        return Err(invalid("F̃ index k must be at least 1"));
    }
    let delta = 2.0 / alpha;
    let kf = k as f64;
    let b = kf - delta;
    let v = scaled_2f1_neg(u as f64 + kf, b, b + 1.0, x, kf, cfg)?;
    Ok((v / (alpha * kf - 2.0)).max(0.0))
}

/// `B̃_m(τ) = τ^{2/α} / α · B(m - 2/α, U + 2/α)`, the whole-plane limit of
/// `r² F̃_m(τ r^{-α})`.
pub fn beta_tilde(tau: f64, m: u32, u: u32, alpha: f64) -> Result<f64> {
    check_tier(u, alpha)?;
    if m == 0 {
        return Err(invalid("B̃ index m must be at least 1"));
    }
    let delta = 2.0 / alpha;
    Ok(tau.powf(delta) / alpha * beta(m as f64 - delta, u as f64 + delta))
}

/// `μ² F(τ / μ^α)`, continuous at `μ = 0` where it tends to `G(τ)`.
pub fn scaled_capital_f(tau: f64, mu: f64, u: u32, alpha: f64) -> Result<f64> {
    let x = tau / mu.powf(alpha);
    if mu == 0.0 || !x.is_finite() {
        return capital_g(tau, u, alpha);
    }
    Ok(mu * mu * capital_f(x, u, alpha)?)
}

/// `μ² F̃_k(τ / μ^α)`, continuous at `μ = 0` where it tends to `B̃_k(τ)`.
pub fn scaled_f_tilde(tau: f64, mu: f64, k: u32, u: u32, alpha: f64) -> Result<f64> {
    let x = tau / mu.powf(alpha);
    if mu == 0.0 || !x.is_finite() {
        return beta_tilde(tau, k, u, alpha);
    }
    Ok(mu * mu * f_tilde(x, k, u, alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn gamma_identities() {
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(5.0), 24.0) < 1e-15);
        assert!(rel(gamma(-1.5), 4.0 * PI.sqrt() / 3.0) < 1e-13);
        assert!(rel(beta(0.5, 0.5), PI) < 1e-13);
        assert!(gamma(-2.0).is_nan());
    }

    #[test]
    fn hyp2f1_zero_argument_is_one() {
        assert_eq!(gauss_2f1_neg(-0.5, 1.0, 0.5, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn hyp2f1_arctan_closed_form() {
        let v = gauss_2f1_neg(-0.5, 1.0, 0.5, 1.0).unwrap();
        assert!(rel(v, 1.785_398_163_397_448_3) < 1e-12, "{v}");
    }

    #[test]
    fn hyp2f1_rejects_pole_in_c() {
        assert!(matches!(gauss_2f1_neg(1.0, 1.0, -2.0, 0.3), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn hyp2f1_reports_nonconvergence() {
        let cfg = SpecFunConfig { series_tol: 1e-12, max_terms: 3 };
        let r = gauss_2f1_neg_with(0.3, 1.7, 2.2, 0.4, &cfg);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn capital_f_trivial_and_closed_form() {
        assert_eq!(capital_f(0.0, 1, 4.0).unwrap(), 0.0);
        assert!(rel(capital_f(1.0, 1, 4.0).unwrap(), PI / 4.0) < 1e-12);
    }

    #[test]
    fn capital_g_values() {
        assert_eq!(capital_g(0.0, 2, 4.0).unwrap(), 0.0);
        assert!(rel(capital_g(1.0, 1, 4.0).unwrap(), PI / 2.0) < 1e-13);
        assert!(rel(capital_g(1.0, 2, 4.0).unwrap(), 3.0 * PI / 4.0) < 1e-13);
    }

    #[test]
    fn f_tilde_vanishes_at_zero() {
        assert_eq!(f_tilde(0.0, 1, 2, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn incomplete_gamma_values() {
        assert_eq!(lower_inc_gamma_reg(1.0, 0.0).unwrap(), 0.0);
        assert!((lower_inc_gamma_reg(1.0, 2f64.ln()).unwrap() - 0.5).abs() < 1e-14);
        let expect = 1.0 - (-2.0f64).exp() * 5.0;
        assert!((lower_inc_gamma_reg(3.0, 2.0).unwrap() - expect).abs() < 1e-13);
        assert!(lower_inc_gamma_reg(0.0, 1.0).is_err());
    }

    #[test]
    fn scaled_forms_continuous_at_zero_mu() {
        let g = capital_g(1.3, 4, 4.0).unwrap();
        let near = scaled_capital_f(1.3, 1e-6, 4, 4.0).unwrap();
        assert!(rel(near, g) < 1e-6);
        assert_eq!(scaled_capital_f(1.3, 0.0, 4, 4.0).unwrap(), g);
        let b = beta_tilde(1.3, 3, 4, 4.0).unwrap();
        let near = scaled_f_tilde(1.3, 1e-6, 3, 4, 4.0).unwrap();
        assert!(rel(near, b) < 1e-6, "{near} vs {b}");
    }
}
