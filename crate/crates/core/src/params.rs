//! Network, content and caching-policy parameters.
//!
//! File indices are zero-based everywhere in this crate. Files `0..n1` are
//! stored at every MBS; the remaining files form the SBS-tier library and are
//! split into the SBS-cached set and the backhaul set.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical-layer and deployment parameters of both tiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// MBS density (m^-2).
    pub lambda1: f64,
    /// SBS density (m^-2).
    pub lambda2: f64,
    /// User density (m^-2).
    pub lambda_u: f64,
    pub m1: u32,
    pub m2: u32,
    pub u1: u32,
    pub u2: u32,
    /// Transmit powers in dBm. They cancel in the interference-limited SIR
    /// and are carried only for reporting.
    pub p1_dbm: f64,
    pub p2_dbm: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// SIR threshold, linear scale.
    pub tau: f64,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("lambda_u", self.lambda_u)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.lambda1 >= self.lambda2 {
            return Err(invalid("MBS density must be below SBS density"));
        }
        if self.u1 == 0 || self.u1 > self.m1 {
            return Err(invalid(format!("need 1 <= U1 <= M1, got U1={} M1={}", self.u1, self.m1)));
        }
        if self.u1 != self.m1 {
            return Err(invalid("each MBS serves U1 = M1 users"));
        }
        if self.u2 == 0 || self.u2 > self.m2 {
            return Err(invalid(format!("need 1 <= U2 <= M2, got U2={} M2={}", self.u2, self.m2)));
        }
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a > 2.0) || !a.is_finite() {
                return Err(invalid(format!("{name} must exceed 2, got {a}")));
            }
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid(format!("tau must be positive and finite, got {}", self.tau)));
        }
        Ok(())
    }

    /// Per-SBS user load `λu / (λ2 U2)`.
    pub fn load(&self) -> f64 {
        self.lambda_u / (self.lambda2 * self.u2 as f64)
    }

    /// Spare spatial degrees of freedom per SBS available for nulling.
    pub fn null_dof(&self) -> u32 {
        self.m2 - self.u2
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }

    /// Small validation setting: 8/6 antennas, two users per SBS.
    pub fn validation_defaults() -> Self {
        Self {
            lambda1: 1e-4,
            lambda2: 5e-4,
            lambda_u: 0.01,
            m1: 8,
            m2: 6,
            u1: 8,
            u2: 2,
            p1_dbm: 46.0,
            p2_dbm: 23.0,
            alpha1: 4.0,
            alpha2: 4.0,
            tau: 1.0,
        }
    }

    /// Optimization-study defaults: 32/16 antennas, four users per SBS.
    pub fn study_defaults() -> Self {
        Self {
            m1: 32,
            m2: 16,
            u1: 32,
            u2: 4,
            ..Self::validation_defaults()
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Library, popularity and storage parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentConfig {
    /// Request probabilities `a_n`, most popular first.
    pub popularity: Vec<f64>,
    /// Number of files stored at every MBS (`C1`).
    pub n1: usize,
    pub c2: usize,
    pub cb: usize,
    /// Exponent used to generate `popularity`, if it came from a Zipf law.
    pub zipf_gamma: Option<f64>,
}

impl ContentConfig {
    /// Zipf popularity `a_n ∝ n^-γ` over `n` files.
    pub fn zipf(n: usize, gamma: f64, n1: usize, c2: usize, cb: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("library must contain at least one file"));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("Zipf exponent must be finite and >= 0, got {gamma}")));
        }
        let weights: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-gamma)).collect();
        let total: f64 = weights.iter().sum();
        let cfg = Self {
            popularity: weights.iter().map(|w| w / total).collect(),
            n1,
            c2,
            cb,
            zipf_gamma: Some(gamma),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.popularity.len();
        if n == 0 {
            return Err(invalid("popularity vector is empty"));
        }
        if self.popularity.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(invalid("popularity entries must be finite and nonnegative"));
        }
        let sum: f64 = self.popularity.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("popularity must sum to 1, sums to {sum}")));
        }
        // ties are allowed so that uniform popularity remains expressible
        if self.popularity.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("popularity must be sorted in nonincreasing order"));
        }
        if self.c2 == 0 {
            return Err(invalid("SBS cache size C2 must be at least 1"));
        }
        if self.n1 + self.c2 > n {
            return Err(invalid(format!(
                "need C1 + C2 <= N, got {} + {} > {n}",
                self.n1, self.c2
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.popularity.len()
    }

    /// Size of the SBS-tier library `N2 = N - N1`.
    pub fn n2(&self) -> usize {
        self.n() - self.n1
    }

    /// Indices of the SBS-tier library.
    pub fn tier2_files(&self) -> std::ops::Range<usize> {
        self.n1..self.n()
    }

    pub fn mbs_mass(&self) -> f64 {
        self.popularity[..self.n1].iter().sum()
    }

    /// Study defaults: 50 files, 20 at MBSs, 10 per SBS, backhaul for 3.
    pub fn study_defaults() -> Self {
        Self::zipf(50, 0.4, 20, 10, 3).expect("defaults are valid")
    }

    /// Small validation setting: 12 files, 4 at MBSs, 3 per SBS.
    pub fn validation_defaults() -> Self {
        Self::zipf(12, 0.8, 4, 3, 2).expect("defaults are valid")
    }
}

/// Which SBS-tier files are cached, how likely each is, and the IN range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachingPolicy {
    /// Sorted, distinct file indices of the SBS-cached set.
    pub nc_set: Vec<usize>,
    /// Caching probability of each entry of `nc_set`.
    pub t: Vec<f64>,
    pub mu: f64,
}

impl CachingPolicy {
    pub fn new(nc_set: Vec<usize>, t: Vec<f64>, mu: f64) -> Self {
        Self { nc_set, t, mu }
    }

    /// Caches the given files with equal probability `C2 / N_c`.
    pub fn uniform(nc_set: Vec<usize>, c2: usize, mu: f64) -> Self {
        let p = c2 as f64 / nc_set.len() as f64;
        let t = vec![p; nc_set.len()];
        Self { nc_set, t, mu }
    }

    pub fn nc(&self) -> usize {
        self.nc_set.len()
    }

    /// Checks membership, box and sum constraints. Zero entries are
    /// accepted: an optimizer may return them and they still count towards
    /// `N_c`.
    pub fn validate(&self, content: &ContentConfig) -> Result<()> {
        if self.nc_set.len() != self.t.len() {
            return Err(invalid("nc_set and T must have equal length"));
        }
        if self.nc_set.len() < content.c2 {
            return Err(invalid(format!(
                "need N_c >= C2, got {} < {}",
                self.nc_set.len(),
                content.c2
            )));
        }
        if self.nc_set.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("nc_set must be strictly increasing"));
        }
        let range = content.tier2_files();
        if let Some(&bad) = self.nc_set.iter().find(|i| !range.contains(i)) {
            return Err(invalid(format!("file {bad} is not in the SBS-tier library")));
        }
        if self.t.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(invalid("caching probabilities must lie in [0, 1]"));
        }
        let sum: f64 = self.t.iter().sum();
        if (sum - content.c2 as f64).abs() > 1e-8 {
            return Err(invalid(format!("caching probabilities sum to {sum}, expected C2 = {}", content.c2)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(invalid(format!("IN coefficient must be finite and >= 0, got {}", self.mu)));
        }
        Ok(())
    }

    /// SBS-tier files served over backhaul.
    pub fn backhaul_set(&self, content: &ContentConfig) -> Vec<usize> {
        content
            .tier2_files()
            .filter(|i| self.nc_set.binary_search(i).is_err())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zipf_normalized_and_decreasing() {
        let c = ContentConfig::zipf(12, 0.8, 4, 3, 2).unwrap();
        assert!((c.popularity.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(c.popularity.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(c.n2(), 8);
    }

    #[test]
    fn defaults_validate() {
        NetworkParams::validation_defaults().validate().unwrap();
        NetworkParams::study_defaults().validate().unwrap();
    }

    #[test]
    fn rejects_bad_network() {
        let mut n = NetworkParams::validation_defaults();
        n.lambda1 = n.lambda2;
        assert!(n.validate().is_err());
        let mut n = NetworkParams::validation_defaults();
        n.u2 = 7;
        assert!(n.validate().is_err());
        let mut n = NetworkParams::validation_defaults();
        n.alpha2 = 2.0;
        assert!(n.validate().is_err());
    }

    #[test]
    fn policy_checks() {
        let c = ContentConfig::validation_defaults();
        let p = CachingPolicy::new(vec![4, 5, 6, 7], vec![0.9, 0.8, 0.7, 0.6], 1.4);
        p.validate(&c).unwrap();
        assert_eq!(p.backhaul_set(&c), vec![8, 9, 10, 11]);
        let bad = CachingPolicy::new(vec![4, 5, 6, 7], vec![0.9, 0.8, 0.7, 0.7], 1.4);
        assert!(bad.validate(&c).is_err());
        let bad = CachingPolicy::new(vec![3, 5, 6, 7], vec![0.9, 0.8, 0.7, 0.6], 1.4);
        assert!(bad.validate(&c).is_err());
    }

    #[test]
    fn db_roundtrip() {
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(-3.7)) + 3.7).abs() < 1e-12);
    }
}
