mod common;

use std::f64::consts::PI;

use hetcache_core::analytics::{
    self, in_miss_prob, mean_theta, psi1, psi2_exact, psi2_special, q1, theta_pmf, toeplitz_coeffs, AseVariant, SbsKernel,
};
use hetcache_core::params::{db_to_linear, CachingPolicy, ContentConfig, NetworkParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use common::rel_diff;

#[test]
fn toeplitz_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (t, w0, w, d) = common::random_toeplitz(&mut rng, 12);
        let q = toeplitz_coeffs(t, w0, &w, d).unwrap();
        let col = common::dense_toeplitz_column(t, w0, &w, d);
        for (a, b) in q.iter().zip(&col) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let norm = common::dense_toeplitz_norm(t, w0, &w, d);
        assert!((q.iter().sum::<f64>() - norm).abs() < 1e-10);
    }
}

#[test]
fn toeplitz_uncoupled_and_scalar() {
    let q = toeplitz_coeffs(0.4, 0.6, &[0.0, 0.0], 3).unwrap();
    assert_eq!(q, vec![0.4, 0.0, 0.0]);
    assert_eq!(toeplitz_coeffs(0.5, 1.5, &[], 1).unwrap(), vec![0.25]);
    assert!(toeplitz_coeffs(0.0, 0.0, &[], 1).is_err());
}

fn exact_vs_oracle(net: &NetworkParams, nc: usize, c2: usize, mu: f64, t: f64) {
    let v = psi2_exact(net, t, nc, c2, mu).unwrap();
    let oracle = common::psi2_oracle(net, nc, c2, mu, t);
    assert!((v - oracle).abs() < 1e-7, "N_c={nc} μ={mu} T={t} τ={}: {v} vs {oracle}", net.tau);
}

#[test]
fn psi2_exact_matches_laplace_quadrature_validation_setting() {
    let net = NetworkParams::validation_defaults();
    for &(nc, mu, t) in &[(4, 1.4, 0.9), (4, 1.4, 0.6), (5, 0.8, 0.6), (6, 0.0, 0.5), (4, 1.0, 0.75), (12, 2.0, 0.25)] {
        exact_vs_oracle(&net, nc, 3, mu, t);
    }
    for db in [-10.0, 0.0, 10.0] {
        exact_vs_oracle(&net.with_tau(db_to_linear(db)), 4, 3, 1.4, 0.8);
    }
}

#[test]
fn psi2_exact_matches_laplace_quadrature_study_setting() {
    let net = NetworkParams::study_defaults();
    for &(db, nc, mu, t) in &[(10.0, 10, 1.317, 1.0), (0.0, 15, 0.7, 0.6), (-10.0, 20, 1.5, 0.3), (4.0, 30, 0.4, 0.1)] {
        exact_vs_oracle(&net.with_tau(db_to_linear(db)), nc, 10, mu, t);
    }
}

#[test]
fn single_user_full_caching_matches_oracle() {
    let net = NetworkParams { m2: 4, u2: 1, ..NetworkParams::validation_defaults() };
    for mu in [0.5, 1.0, 1.7] {
        exact_vs_oracle(&net, 3, 3, mu, 1.0);
        exact_vs_oracle(&net, 6, 3, mu, 1.0);
    }
}

#[test]
fn psi1_closed_form_and_quadrature() {
    let net = NetworkParams { m1: 1, u1: 1, ..NetworkParams::validation_defaults() };
    assert!((psi1(&net).unwrap() - 1.0 / (1.0 + PI / 4.0)).abs() < 1e-12);
    let net = NetworkParams::validation_defaults();
    let oracle = 1.0 / (1.0 + common::capital_f(1.0, 8, 4.0));
    assert!(rel_diff(psi1(&net).unwrap(), oracle) < 1e-9);
    let tiny = net.with_tau(1e-12);
    assert!((psi1(&tiny).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn q1_examples() {
    let net = NetworkParams::validation_defaults();
    let p1 = psi1(&net).unwrap();
    // no backhaul files: only the MBS-cached mass counts
    let content = ContentConfig::validation_defaults();
    let all: Vec<usize> = content.tier2_files().collect();
    let policy = CachingPolicy::uniform(all, 3, 1.0);
    let mass: f64 = content.popularity[..4].iter().sum();
    assert!((q1(&net, &content, &policy).unwrap() - mass * p1).abs() < 1e-14);
    // backhaul capacity not binding
    let content = common::zipf(12, 0.8, 4, 3, 10);
    let policy = CachingPolicy::uniform(vec![4, 5, 6, 7], 3, 1.0);
    let mass: f64 = content.popularity[..4].iter().chain(&content.popularity[8..]).sum();
    assert!((q1(&net, &content, &policy).unwrap() - mass * p1).abs() < 1e-14);
    // Cb = 2 of the four backhaul files: half of that mass is retrieved
    let content = ContentConfig::validation_defaults();
    let mass: f64 = content.popularity[..4].iter().sum::<f64>() + 0.5 * content.popularity[8..].iter().sum::<f64>();
    assert!((q1(&net, &content, &policy).unwrap() - mass * p1).abs() < 1e-14);
}

#[test]
fn theta_statistics() {
    assert!((mean_theta(4, 3, 2, 1.4) - 3.226_666_666_666_667).abs() < 1e-12);
    assert_eq!(mean_theta(3, 3, 2, 0.8), 0.0);
    assert_eq!(mean_theta(7, 3, 2, 0.0), 0.0);
    assert_eq!(theta_pmf(0, 0.0), 1.0);
    assert!((theta_pmf(1, 1.0) - (-1f64).exp()).abs() < 1e-15);
    assert_eq!(in_miss_prob(4, 4, 2.0), 1.0);
    assert_eq!(in_miss_prob(6, 2, 0.0), 0.0);
}

#[test]
fn in_miss_prob_against_sampling() {
    let theta_bar = 3.226_666_666_666_667;
    let k = 4u64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dist = Poisson::new(theta_bar).unwrap();
    let n = 10_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let th = dist.sample(&mut rng) as u64;
        let v = if th >= k { (th + 1 - k) as f64 / (th + 1) as f64 } else { 0.0 };
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let sd = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    let eps = in_miss_prob(6, 2, theta_bar);
    assert!((eps - mean).abs() < 3.0 * sd, "{eps} vs {mean} ± {sd}");
}

#[test]
fn special_case_structure() {
    let net = NetworkParams { m2: 3, u2: 3, ..NetworkParams::validation_defaults() };
    for t in [0.0, 0.2, 0.5, 1.0] {
        let sp = psi2_special(&net, t).unwrap();
        for mu in [0.0, 0.5, 1.0, 2.0] {
            let k = SbsKernel::new(&net, 6, 3, mu).unwrap();
            assert!((k.psi2_exact(t).unwrap() - sp).abs() < 1e-12);
            // a single 1x1 system: both bounds are tight
            assert!((k.psi2_lower(t) - sp).abs() < 1e-12);
            assert!((k.psi2_upper(t) - sp).abs() < 1e-12);
        }
    }
    let g = hetcache_core::specfun::capital_g(net.tau, 3, 4.0).unwrap();
    let f = hetcache_core::specfun::capital_f(net.tau, 3, 4.0).unwrap();
    let expect = 0.5 / ((1.0 - g + f) * 0.5 + g);
    assert!((psi2_special(&net, 0.5).unwrap() - expect).abs() < 1e-15);
    assert!((psi2_special(&net.with_tau(1e-14), 1.0).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn special_case_ase_independent_of_mu() {
    let net = NetworkParams { m2: 4, u2: 4, ..NetworkParams::validation_defaults() };
    let content = ContentConfig::validation_defaults();
    let base = CachingPolicy::new(vec![4, 5, 6, 7], vec![0.9, 0.8, 0.7, 0.6], 0.0);
    let reference = analytics::ase(&net, &content, &base, AseVariant::Exact).unwrap().total();
    for mu in [0.5, 1.0, 2.0] {
        let p = CachingPolicy { mu, ..base.clone() };
        let v = analytics::ase(&net, &content, &p, AseVariant::Exact).unwrap().total();
        assert!((v - reference).abs() <= 1e-12 * reference);
    }
}

#[test]
fn ase_vanishes_at_zero_threshold() {
    let net = NetworkParams::validation_defaults().with_tau(1e-15);
    let content = ContentConfig::validation_defaults();
    let p = CachingPolicy::new(vec![4, 5, 6, 7], vec![0.9, 0.8, 0.7, 0.6], 1.0);
    assert!(analytics::ase(&net, &content, &p, AseVariant::Exact).unwrap().total() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bounds_bracket_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_net(&mut rng);
        let (content, policy) = common::random_instance(&mut rng);
        let r = analytics::report(&net, &content, &policy).unwrap();
        prop_assert!(r.ase_lower <= r.ase * (1.0 + 1e-9));
        prop_assert!(r.ase <= r.ase_upper * (1.0 + 1e-9));
        prop_assert!(r.q2_upper - r.q2_lower < 1.0);
    }

    #[test]
    fn q1_nonincreasing_in_tau(db in -10.0f64..10.0, step in 0.01f64..3.0) {
        let net = NetworkParams::validation_defaults();
        let content = ContentConfig::validation_defaults();
        let p = CachingPolicy::new(vec![4, 5, 6, 7], vec![0.9, 0.8, 0.7, 0.6], 1.4);
        let a = q1(&net.with_tau(db_to_linear(db)), &content, &p).unwrap();
        let b = q1(&net.with_tau(db_to_linear(db + step)), &content, &p).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn mean_theta_monotone(nc in 1usize..40, c2 in 1usize..10, u2 in 1u32..8, mu in 0.0f64..3.0, dmu in 0.0f64..1.0) {
        let nc = nc.max(c2);
        let v = mean_theta(nc, c2, u2, mu);
        prop_assert!(v >= 0.0);
        prop_assert!(mean_theta(nc, c2, u2, mu + dmu) >= v);
        prop_assert!(mean_theta(nc + 1, c2, u2, mu) >= v);
        if nc > c2 {
            prop_assert!(mean_theta(nc, c2 + 1, u2, mu) <= v);
        }
    }
}
