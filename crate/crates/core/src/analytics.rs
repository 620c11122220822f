//! Closed-form success probabilities and area spectral efficiency.
//!
//! The SBS-tier quantities only depend on the policy through `(N_c, μ)` and
//! the per-file caching probability `T_n`. [`SbsKernel`] evaluates everything
//! that depends on `(N_c, μ)` once; per-file work is then a handful of
//! arithmetic operations, which is what the optimizers rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{CachingPolicy, ContentConfig, NetworkParams};
use crate::specfun::{
    beta_tilde, capital_f, capital_g, f_tilde, ln_gamma, lower_inc_gamma_reg, pochhammer,
    scaled_capital_f, scaled_f_tilde,
};

const PROB_SLACK: f64 = 1e-9;

/// Clamps float drift into `[0, 1]`; anything further out is a bug.
pub fn clamp_prob(what: &'static str, value: f64) -> Result<f64> {
    if !(value >= -PROB_SLACK && value <= 1.0 + PROB_SLACK) {
        return Err(Error::ProbabilityOutOfRange { what, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Which SBS-tier success probability to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AseVariant {
    Exact,
    Lower,
    Upper,
}

/// Success probability of an MBS-served user, `1 / (1 + F1(τ))`.
pub fn psi1(net: &NetworkParams) -> Result<f64> {
    let f = capital_f(net.tau, net.u1, net.alpha1)?;
    clamp_prob("psi1", 1.0 / (1.0 + f))
}

/// Backhaul retrieval probability `min(1, Cb / Nb)`.
pub fn backhaul_xi(cb: usize, nb: usize) -> f64 {
    if nb == 0 {
        1.0
    } else {
        (cb as f64 / nb as f64).min(1.0)
    }
}

/// Request mass served by the MBS tier: MBS-cached files plus backhaul files
/// weighted by their retrieval probability.
pub fn mbs_served_mass(content: &ContentConfig, nc_set: &[usize]) -> f64 {
    let nb = content.n2() - nc_set.len();
    let cached: f64 = nc_set.iter().map(|&i| content.popularity[i]).sum();
    let tier2: f64 = content.popularity[content.n1..].iter().sum();
    let backhaul = if nb == 0 { 0.0 } else { (tier2 - cached).max(0.0) };
    content.mbs_mass() + backhaul * backhaul_xi(content.cb, nb)
}

/// MBS-tier success probability.
pub fn q1(net: &NetworkParams, content: &ContentConfig, policy: &CachingPolicy) -> Result<f64> {
    clamp_prob("q1", mbs_served_mass(content, &policy.nc_set) * psi1(net)?)
}

/// Mean number of IN requests received by an SBS.
pub fn mean_theta(nc: usize, c2: usize, u2: u32, mu: f64) -> f64 {
    let mu2 = mu * mu;
    let u2 = u2 as f64;
    (nc as f64 * u2 * mu2 / c2 as f64 - mu2.min(1.0) * u2).max(0.0)
}

/// Poisson PMF of the IN request count, evaluated in log space.
pub fn theta_pmf(theta: u32, theta_bar: f64) -> f64 {
    if theta_bar == 0.0 {
        return if theta == 0 { 1.0 } else { 0.0 };
    }
    let k = theta as f64;
    (k * theta_bar.ln() - theta_bar - ln_gamma(k + 1.0)).exp()
}

/// IN missing probability `ε`: the chance that a request reaching an SBS is
/// denied because the SBS has no spare spatial DoF left.
pub fn in_miss_prob(m2: u32, u2: u32, theta_bar: f64) -> f64 {
    let k = m2.saturating_sub(u2);
    if k == 0 {
        return 1.0;
    }
    if theta_bar == 0.0 {
        return 0.0;
    }
    let cap = (10.0 * (theta_bar + m2 as f64)).ceil().max(k as f64 + 1.0) as u32;
    let mut sum = 0.0;
    let mut p = theta_pmf(k, theta_bar);
    let mut theta = k;
    while theta <= cap {
        let weight = (theta + 1 - k) as f64 / (theta + 1) as f64;
        sum += weight * p;
        // geometric bound on the remaining Poisson tail
        let ratio = theta_bar / (theta + 2) as f64;
        if ratio < 1.0 {
            let tail = p * ratio / (1.0 - ratio);
            if tail < 1e-12 {
                break;
            }
        }
        p *= theta_bar / (theta + 1) as f64;
        theta += 1;
    }
    sum.clamp(0.0, 1.0)
}

/// Probability that an SBS receives at least `M2 - U2` requests.
pub fn saturation_prob(m2: u32, u2: u32, theta_bar: f64) -> Result<f64> {
    let k = m2.saturating_sub(u2);
    if k == 0 {
        return Ok(1.0);
    }
    lower_inc_gamma_reg(k as f64, theta_bar)
}

/// First `d2` power-series coefficients of `T / (T + w0 - Σ_m w_m z^m)`, i.e.
/// the first column of the inverse lower-triangular Toeplitz matrix scaled
/// by `T`.
pub fn toeplitz_coeffs(t: f64, w0: f64, w: &[f64], d2: usize) -> Result<Vec<f64>> {
    if d2 == 0 {
        return Err(crate::error::invalid("Toeplitz order must be at least 1"));
    }
    if w.len() + 1 < d2 {
        return Err(crate::error::invalid("not enough off-diagonal coefficients"));
    }
    let diag = t + w0;
    if !(diag > 0.0) {
        return Err(Error::DegenerateInput(format!("Toeplitz diagonal T + w0 = {diag} is not positive")));
    }
    let mut q = Vec::with_capacity(d2);
    q.push(t / diag);
    for m in 1..d2 {
        let acc: f64 = (1..=m).map(|k| w[k - 1] * q[m - k]).sum();
        q.push(acc / diag);
    }
    Ok(q)
}

/// `weight · T / (r1 T + r2)`, the common shape of every bound term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinFrac {
    pub weight: f64,
    pub r1: f64,
    pub r2: f64,
}

impl LinFrac {
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.weight * t / (self.r1 * t + self.r2)
    }

    /// Derivative with respect to `T`.
    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        let d = self.r1 * t + self.r2;
        self.weight * self.r2 / (d * d)
    }
}

/// `T`-affine coefficient `c + t·T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Affine {
    c: f64,
    t: f64,
}

impl Affine {
    #[inline]
    fn at(&self, t: f64) -> f64 {
        self.c + self.t * t
    }
}

/// Everything in `Ψ2` that depends on `(N_c, μ)` but not on `T_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsKernel {
    pub nc: usize,
    pub mu: f64,
    pub theta_bar: f64,
    pub epsilon: f64,
    /// `P(Θ ≥ M2 - U2)`.
    pub p_sat: f64,
    /// `p_Θ(θ)` for `θ < M2 - U2`.
    pub pmf: Vec<f64>,
    w0: Affine,
    /// `w_1 .. w_{M2-U2}`, including the `2 (U2)_m / m!` factor.
    w: Vec<Affine>,
    lower: Vec<LinFrac>,
    upper: Vec<LinFrac>,
}

impl SbsKernel {
    pub fn new(net: &NetworkParams, nc: usize, c2: usize, mu: f64) -> Result<Self> {
        net.validate()?;
        if nc < c2 || c2 == 0 {
            return Err(crate::error::invalid(format!("need N_c >= C2 >= 1, got N_c={nc}, C2={c2}")));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(crate::error::invalid(format!("IN coefficient must be finite and >= 0, got {mu}")));
        }
        let (u2, alpha, tau) = (net.u2, net.alpha2, net.tau);
        let k = net.null_dof();
        let theta_bar = mean_theta(nc, c2, u2, mu);
        let epsilon = in_miss_prob(net.m2, u2, theta_bar);
        let p_sat = saturation_prob(net.m2, u2, theta_bar)?;
        let pmf: Vec<f64> = (0..k).map(|th| theta_pmf(th, theta_bar)).collect();

        let w0 = Self::w0_at(net, mu, epsilon, tau)?;
        let mut w = Vec::with_capacity(k as usize);
        for m in 1..=k {
            let bt = beta_tilde(tau, m, u2, alpha)?;
            let ft = f_tilde(tau, m, u2, alpha)?;
            let sft = scaled_f_tilde(tau, mu, m, u2, alpha)?;
            let rho = epsilon * bt + (1.0 - epsilon) * sft;
            let slope = if mu < 1.0 { ft - rho } else { epsilon * (ft - bt) };
            let coef = 2.0 * (pochhammer(u2 as f64, m as usize) / (ln_gamma(m as f64 + 1.0)).exp());
            w.push(Affine { c: coef * rho, t: coef * slope });
        }

        let exact_single = LinFrac { weight: p_sat, r1: 1.0 + w0.t, r2: w0.c };
        let mut lower = Vec::with_capacity(k as usize + 1);
        let mut upper = Vec::new();
        for (theta, &p) in pmf.iter().enumerate() {
            let d = (k + 1) as usize - theta;
            let mut r1 = 1.0 + w0.t;
            let mut r2 = w0.c;
            for m in 1..d {
                let scale = 1.0 - m as f64 / d as f64;
                r1 -= scale * w[m - 1].t;
                r2 -= scale * w[m - 1].c;
            }
            lower.push(LinFrac { weight: p, r1, r2 });

            let ln_fact = ln_gamma(d as f64 + 1.0);
            let beta = (-ln_fact / d as f64).exp();
            for i in 1..=d {
                let a = Self::w0_at(net, mu, epsilon, i as f64 * beta * tau)?;
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                upper.push(LinFrac {
                    weight: sign * binomial(d, i) * p,
                    r1: 1.0 + a.t,
                    r2: a.c,
                });
            }
        }
        lower.push(exact_single);
        upper.push(exact_single);

        for term in lower.iter().chain(upper.iter()) {
            if !(term.r2 > 0.0 && term.r1 + term.r2 > 0.0) {
                return Err(Error::DegenerateInput(format!(
                    "bound denominator not positive on [0, 1]: r1={}, r2={}",
                    term.r1, term.r2
                )));
            }
        }

        Ok(Self { nc, mu, theta_bar, epsilon, p_sat, pmf, w0, w, lower, upper })
    }

    /// Interference coefficient `w0` with the threshold replaced by `x`,
    /// as an affine function of `T_n`.
    fn w0_at(net: &NetworkParams, mu: f64, eps: f64, x: f64) -> Result<Affine> {
        let (u2, alpha) = (net.u2, net.alpha2);
        let g = capital_g(x, u2, alpha)?;
        let f = capital_f(x, u2, alpha)?;
        let sf = scaled_capital_f(x, mu, u2, alpha)?;
        let rho = eps * g + (1.0 - eps) * sf;
        let slope = if mu < 1.0 { f - rho } else { eps * f - eps * g };
        Ok(Affine { c: rho, t: slope })
    }

    pub fn w0(&self, t: f64) -> f64 {
        self.w0.at(t)
    }

    /// `w_1 .. w_{M2-U2}` at caching probability `t`.
    pub fn w(&self, t: f64) -> Vec<f64> {
        self.w.iter().map(|a| a.at(t)).collect()
    }

    /// Linear-fractional terms whose sum is the lower bound on `Ψ2`.
    pub fn lower_terms(&self) -> &[LinFrac] {
        &self.lower
    }

    /// Signed linear-fractional terms whose sum is the upper bound on `Ψ2`.
    pub fn upper_terms(&self) -> &[LinFrac] {
        &self.upper
    }

    pub fn terms(&self, variant: AseVariant) -> Option<&[LinFrac]> {
        match variant {
            AseVariant::Exact => None,
            AseVariant::Lower => Some(&self.lower),
            AseVariant::Upper => Some(&self.upper),
        }
    }

    /// Exact SBS-tier success probability of a file cached with probability `t`.
    pub fn psi2_exact(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let w0 = self.w0(t);
        let w = self.w(t);
        let dmax = self.pmf.len() + 1;
        let q = toeplitz_coeffs(t, w0, &w, dmax)?;
        let mut prefix = Vec::with_capacity(dmax + 1);
        prefix.push(0.0);
        for &v in &q {
            prefix.push(prefix.last().copied().unwrap_or(0.0) + v);
        }
        let mut total = self.p_sat * q[0];
        for (theta, &p) in self.pmf.iter().enumerate() {
            total += p * prefix[dmax - theta];
        }
        clamp_prob("psi2", total)
    }

    pub fn psi2_lower(&self, t: f64) -> f64 {
        self.lower.iter().map(|l| l.value(t)).sum()
    }

    pub fn psi2_upper(&self, t: f64) -> f64 {
        self.upper.iter().map(|l| l.value(t)).sum()
    }

    pub fn psi2(&self, t: f64, variant: AseVariant) -> Result<f64> {
        match variant {
            AseVariant::Exact => self.psi2_exact(t),
            AseVariant::Lower => clamp_prob("psi2 lower", self.psi2_lower(t)),
            AseVariant::Upper => Ok(self.psi2_upper(t).max(0.0)),
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Exact `Ψ2` for one file.
pub fn psi2_exact(net: &NetworkParams, t: f64, nc: usize, c2: usize, mu: f64) -> Result<f64> {
    SbsKernel::new(net, nc, c2, mu)?.psi2_exact(t)
}

pub fn psi2_lower(net: &NetworkParams, t: f64, nc: usize, c2: usize, mu: f64) -> Result<f64> {
    Ok(SbsKernel::new(net, nc, c2, mu)?.psi2_lower(t))
}

pub fn psi2_upper(net: &NetworkParams, t: f64, nc: usize, c2: usize, mu: f64) -> Result<f64> {
    Ok(SbsKernel::new(net, nc, c2, mu)?.psi2_upper(t))
}

/// `Ψ2` when every spare antenna is used for SDMA (`U2 = M2`); independent
/// of `μ` because no request can ever be granted.
pub fn psi2_special(net: &NetworkParams, t: f64) -> Result<f64> {
    if net.u2 != net.m2 {
        return Err(crate::error::invalid("the special case requires U2 = M2"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let g = capital_g(net.tau, net.u2, net.alpha2)?;
    let f = capital_f(net.tau, net.u2, net.alpha2)?;
    clamp_prob("psi2 special", t / ((1.0 - g + f) * t + g))
}

/// `Σ a_n Ψ2(T_n)` over the cached set.
pub fn q2_with_kernel(
    kernel: &SbsKernel,
    content: &ContentConfig,
    nc_set: &[usize],
    t: &[f64],
    variant: AseVariant,
) -> Result<f64> {
    let mut sum = 0.0;
    for (&i, &ti) in nc_set.iter().zip(t) {
        sum += content.popularity[i] * kernel.psi2(ti, variant)?;
    }
    match variant {
        AseVariant::Upper => Ok(sum.max(0.0)),
        _ => clamp_prob("q2", sum),
    }
}

pub fn q2(
    net: &NetworkParams,
    content: &ContentConfig,
    policy: &CachingPolicy,
    variant: AseVariant,
) -> Result<f64> {
    policy.validate(content)?;
    let kernel = SbsKernel::new(net, policy.nc(), content.c2, policy.mu)?;
    q2_with_kernel(&kernel, content, &policy.nc_set, &policy.t, variant)
}

/// ASE split into the MBS-tier and SBS-tier contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AseSplit {
    pub ase1: f64,
    pub ase2: f64,
}

impl AseSplit {
    pub fn total(&self) -> f64 {
        self.ase1 + self.ase2
    }
}

/// `log2(1 + τ) λ1 U1`, the MBS-tier ASE per unit STP.
pub fn tier1_scale(net: &NetworkParams) -> f64 {
    (1.0 + net.tau).log2() * net.lambda1 * net.u1 as f64
}

/// `log2(1 + τ) λ2 U2`, the SBS-tier ASE per unit STP.
pub fn tier2_scale(net: &NetworkParams) -> f64 {
    (1.0 + net.tau).log2() * net.lambda2 * net.u2 as f64
}

pub fn ase_from_probs(net: &NetworkParams, q1: f64, q2: f64) -> AseSplit {
    AseSplit { ase1: tier1_scale(net) * q1, ase2: tier2_scale(net) * q2 }
}

pub fn ase(
    net: &NetworkParams,
    content: &ContentConfig,
    policy: &CachingPolicy,
    variant: AseVariant,
) -> Result<AseSplit> {
    let q1 = q1(net, content, policy)?;
    let q2 = q2(net, content, policy, variant)?;
    Ok(ase_from_probs(net, q1, q2))
}

/// All analytic quantities for one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub psi1: f64,
    pub q1: f64,
    pub q2: f64,
    pub q2_lower: f64,
    pub q2_upper: f64,
    pub ase: f64,
    pub ase_lower: f64,
    pub ase_upper: f64,
    pub ase1: f64,
    pub ase2: f64,
    pub theta_bar: f64,
    pub epsilon: f64,
    pub p_sat: f64,
}

pub fn report(net: &NetworkParams, content: &ContentConfig, policy: &CachingPolicy) -> Result<AnalyticReport> {
    net.validate()?;
    content.validate()?;
    policy.validate(content)?;
    let kernel = SbsKernel::new(net, policy.nc(), content.c2, policy.mu)?;
    let psi1 = psi1(net)?;
    let q1 = clamp_prob("q1", mbs_served_mass(content, &policy.nc_set) * psi1)?;
    let q2_of = |v| q2_with_kernel(&kernel, content, &policy.nc_set, &policy.t, v);
    let (q2, q2_lower, q2_upper) = (q2_of(AseVariant::Exact)?, q2_of(AseVariant::Lower)?, q2_of(AseVariant::Upper)?);
    let exact = ase_from_probs(net, q1, q2);
    Ok(AnalyticReport {
        psi1,
        q1,
        q2,
        q2_lower,
        q2_upper,
        ase: exact.total(),
        ase_lower: ase_from_probs(net, q1, q2_lower).total(),
        ase_upper: ase_from_probs(net, q1, q2_upper).total(),
        ase1: exact.ase1,
        ase2: exact.ase2,
        theta_bar: kernel.theta_bar,
        epsilon: kernel.epsilon,
        p_sat: kernel.p_sat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference_policy() -> CachingPolicy {
        CachingPolicy::new(vec![4, 5, 6, 7], vec![0.9, 0.8, 0.7, 0.6], 1.4)
    }

    #[test]
    fn psi1_closed_form() {
        let mut net = NetworkParams::validation_defaults();
        net.m1 = 1;
        net.u1 = 1;
        assert!((psi1(&net).unwrap() - 1.0 / (1.0 + PI / 4.0)).abs() < 1e-12);
        net.tau = 1e-12;
        assert!((psi1(&net).unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn mean_theta_cases() {
        assert_eq!(mean_theta(4, 3, 2, 0.0), 0.0);
        assert_eq!(mean_theta(3, 3, 2, 0.7), 0.0);
        assert!((mean_theta(4, 3, 2, 1.4) - 3.226_666_666_666_667).abs() < 1e-12);
    }

    #[test]
    fn pmf_and_miss_prob() {
        assert_eq!(theta_pmf(0, 0.0), 1.0);
        assert!((theta_pmf(1, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(in_miss_prob(4, 4, 2.0), 1.0);
        assert_eq!(in_miss_prob(6, 2, 0.0), 0.0);
        let total: f64 = (0..60).map(|k| theta_pmf(k, 3.2)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toeplitz_trivial() {
        assert_eq!(toeplitz_coeffs(0.5, 1.5, &[], 1).unwrap(), vec![0.25]);
        assert_eq!(toeplitz_coeffs(0.5, 1.5, &[0.0, 0.0], 3).unwrap(), vec![0.25, 0.0, 0.0]);
        assert!(matches!(toeplitz_coeffs(0.0, 0.0, &[], 1), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn q1_without_backhaul() {
        let net = NetworkParams::validation_defaults();
        let content = ContentConfig::validation_defaults();
        let all: Vec<usize> = content.tier2_files().collect();
        let policy = CachingPolicy::uniform(all, content.c2, 1.0);
        let expect = content.mbs_mass() * psi1(&net).unwrap();
        assert!((q1(&net, &content, &policy).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_caching_probability_contributes_nothing() {
        let net = NetworkParams::validation_defaults();
        let k = SbsKernel::new(&net, 4, 3, 1.0).unwrap();
        assert_eq!(k.psi2_exact(0.0).unwrap(), 0.0);
        assert_eq!(k.psi2_lower(0.0), 0.0);
        assert_eq!(k.psi2_upper(0.0), 0.0);
    }

    #[test]
    fn bounds_bracket_exact_at_fig2() {
        let net = NetworkParams::validation_defaults();
        let content = ContentConfig::validation_defaults();
        let r = report(&net, &content, &reference_policy()).unwrap();
        assert!(r.ase_lower <= r.ase + 1e-12 && r.ase <= r.ase_upper + 1e-12, "{r:?}");
        assert!(r.q2 > 0.0 && r.q2 < 1.0);
    }

    #[test]
    fn special_case_matches_general_kernel() {
        let mut net = NetworkParams::validation_defaults();
        net.u2 = net.m2;
        for &t in &[0.1, 0.5, 1.0] {
            let s = psi2_special(&net, t).unwrap();
            for &mu in &[0.0, 0.5, 1.0, 2.0] {
                let e = psi2_exact(&net, t, 4, 3, mu).unwrap();
                assert!((e - s).abs() < 1e-14, "{e} vs {s}");
            }
        }
    }
}
