//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the special-function or Toeplitz code of the
//! crate: integrals are done by adaptive Gauss–Kronrod quadrature, matrix
//! norms by dense inversion and discrete searches by brute force.

#![allow(dead_code)]

use std::f64::consts::PI;

use hetcache_core::params::{ContentConfig, NetworkParams};
use nalgebra::DMatrix;
use statrs::distribution::{Discrete, DiscreteCDF, Poisson};

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`: the
/// interval with the largest error estimate is bisected until the summed
/// estimate drops below `rel_tol` of the total.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut pieces = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..50_000 {
        let total: f64 = pieces.iter().map(|p| p.2 .0).sum();
        let err: f64 = pieces.iter().map(|p| p.2 .1).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            return total;
        }
        let worst = (0..pieces.len()).max_by(|&i, &j| pieces[i].2 .1.total_cmp(&pieces[j].2 .1)).unwrap();
        let (lo, hi, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        pieces.push((lo, mid, gk15(&f, lo, mid)));
        pieces.push((mid, hi, gk15(&f, mid, hi)));
    }
    panic!("quadrature did not converge on [{a}, {b}]");
}

/// `∫_a^∞ f`, mapped onto `[0, 1)` by `v = a + s / (1 - s)`.
pub fn integrate_to_inf(f: impl Fn(f64) -> f64, a: f64, rel_tol: f64) -> f64 {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let d = 1.0 - s;
            f(a + s / d) / (d * d)
        },
        0.0,
        1.0,
        rel_tol,
    )
}

/// `∫_a^∞ f` for `a > 0` over `v = e^w`, which turns algebraic tails into
/// exponential ones.
pub fn integrate_log_tail(f: impl Fn(f64) -> f64, a: f64, rel_tol: f64) -> f64 {
    let w0 = a.ln();
    integrate_to_inf(
        |w| {
            let v = (w0 + w).exp();
            if v.is_finite() { f(v) * v } else { 0.0 }
        },
        0.0,
        rel_tol,
    )
}

/// `1 - (1 + y)^{-u}` without cancellation for small `y`.
fn one_minus_pow(y: f64, u: f64) -> f64 {
    -(-u * y.ln_1p()).exp_m1()
}

/// `F(x) = 2 ∫_1^∞ (1 - (1 + x v^-α)^-U) v dv`.
pub fn capital_f(x: f64, u: u32, alpha: f64) -> f64 {
    2.0 * integrate_log_tail(|v| one_minus_pow(x * v.powf(-alpha), u as f64) * v, 1.0, 1e-12)
}

/// `F̃_k(x)` from the Euler integral of its hypergeometric factor,
/// `2F1(a, b; b+1; -x) = b ∫_0^1 t^{b-1} (1 + x t)^{-a} dt`, taken over
/// `t = e^{-w}`.
pub fn f_tilde(x: f64, k: u32, u: u32, alpha: f64) -> f64 {
    let b = k as f64 - 2.0 / alpha;
    let a = (u + k) as f64;
    let inner = integrate_to_inf(|w| (-b * w).exp() * (1.0 + x * (-w).exp()).powf(-a), 0.0, 1e-12);
    x.powi(k as i32) / (alpha * k as f64 - 2.0) * b * inner
}

/// `T · ‖W^{-1}‖_1` (largest absolute column sum) of the lower-triangular
/// Toeplitz matrix with diagonal `T + w0` and sub-diagonals `-w_m`.
pub fn dense_toeplitz_norm(t: f64, w0: f64, w: &[f64], d: usize) -> f64 {
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            t + w0
        } else if i > j {
            -w[i - j - 1]
        } else {
            0.0
        }
    });
    let inv = m.try_inverse().expect("triangular with nonzero diagonal");
    let norm = (0..d).map(|j| inv.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    t * norm
}

/// First column of `T · W^{-1}`.
pub fn dense_toeplitz_column(t: f64, w0: f64, w: &[f64], d: usize) -> Vec<f64> {
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            t + w0
        } else if i > j {
            -w[i - j - 1]
        } else {
            0.0
        }
    });
    let inv = m.try_inverse().expect("triangular with nonzero diagonal");
    inv.column(0).iter().map(|v| t * v).collect()
}

fn pochhammer(u: f64, k: usize) -> f64 {
    (0..k).map(|i| u + i as f64).product()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Interferer regions around a user at unit serving distance: `(lo, hi,
/// density / λ2)` for the nulled-if-granted, cache-miss and far rings.
fn regions(mu: f64, eps: f64, t: f64) -> [(f64, f64, f64); 3] {
    if mu < 1.0 {
        [(0.0, mu, eps * (1.0 - t)), (mu, 1.0, 1.0 - t), (1.0, f64::INFINITY, 1.0)]
    } else {
        [(0.0, 1.0, eps * (1.0 - t)), (1.0, mu, eps), (mu, f64::INFINITY, 1.0)]
    }
}

fn ring(f: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64) -> f64 {
    if hi.is_infinite() {
        integrate_log_tail(f, lo, 1e-12)
    } else if hi > lo {
        integrate(f, lo, hi, 1e-12)
    } else {
        0.0
    }
}

/// Success probability given `D` desired-signal DoF, computed from the
/// Laplace transform of the interference: the `k`-th derivatives of its
/// exponent come from direct quadrature over the three interferer rings, the
/// Leibniz recursion gives `(-s)^m L^(m)(s) / m!`, and the serving distance
/// is integrated out numerically.
pub fn success_given_dof(tau: f64, alpha: f64, u: u32, mu: f64, eps: f64, t: f64, d: usize) -> f64 {
    let uf = u as f64;
    // c[j] = (-s)^j χ^(j)(s) / j! divided by λ2 z²
    let mut c = vec![0.0; d];
    for (lo, hi, lam) in regions(mu, eps, t) {
        if lam == 0.0 {
            continue;
        }
        c[0] -= 2.0 * PI * lam * ring(|v| if v > 0.0 { one_minus_pow(tau * v.powf(-alpha), uf) * v } else { 0.0 }, lo, hi);
        for (j, cj) in c.iter_mut().enumerate().skip(1) {
            let jf = j as f64;
            let g = move |v: f64| {
                if v > 0.0 {
                    tau.powf(jf) * v.powf(1.0 - alpha * jf) / (1.0 + tau * v.powf(-alpha)).powf(uf + jf)
                } else {
                    0.0
                }
            };
            *cj += 2.0 * PI * lam * pochhammer(uf, j) / factorial(j) * ring(g, lo, hi);
        }
    }
    // y = π λ2 z² has density T e^{-T y}
    let conditional = |y: f64| -> f64 {
        let r2 = y / PI;
        let mut x = vec![(c[0] * r2).exp()];
        for m in 1..d {
            let v: f64 = (0..m).map(|k| (m - k) as f64 / m as f64 * c[m - k] * r2 * x[k]).sum();
            x.push(v);
        }
        x.iter().sum()
    };
    integrate_to_inf(|y| conditional(y) * t * (-t * y).exp(), 0.0, 1e-11)
}

/// Exact SBS-tier success probability of a file cached with probability `t`,
/// averaged over the Poisson number of received IN requests.
pub fn psi2_oracle(net: &NetworkParams, nc: usize, c2: usize, mu: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let k = (net.m2 - net.u2) as usize;
    let u2 = net.u2 as f64;
    let theta_bar = (nc as f64 * u2 * mu * mu / c2 as f64 - (mu * mu).min(1.0) * u2).max(0.0);
    let pmf = |th: usize| -> f64 {
        if theta_bar == 0.0 {
            return if th == 0 { 1.0 } else { 0.0 };
        }
        Poisson::new(theta_bar).unwrap().pmf(th as u64)
    };
    let eps = if k == 0 {
        1.0
    } else {
        (k..k + 400).map(|th| (th + 1 - k) as f64 / (th + 1) as f64 * pmf(th)).sum()
    };
    let p_sat = if k == 0 {
        1.0
    } else if theta_bar == 0.0 {
        0.0
    } else {
        1.0 - Poisson::new(theta_bar).unwrap().cdf(k as u64 - 1)
    };
    let (tau, alpha) = (net.tau, net.alpha2);
    let mut total = p_sat * success_given_dof(tau, alpha, net.u2, mu, eps, t, 1);
    for th in 0..k {
        total += pmf(th) * success_given_dof(tau, alpha, net.u2, mu, eps, t, k + 1 - th);
    }
    total
}

/// Every subset of `files` with at least `min_len` elements, in
/// lexicographic order of the sorted index lists.
pub fn subsets_at_least(files: &[usize], min_len: usize) -> Vec<Vec<usize>> {
    let n = files.len();
    let mut out = Vec::new();
    for mask in 0u64..(1 << n) {
        if (mask.count_ones() as usize) < min_len {
            continue;
        }
        out.push((0..n).filter(|i| mask >> i & 1 == 1).map(|i| files[i]).collect());
    }
    out.sort();
    out
}

/// Zipf library with the given size split.
pub fn zipf(n: usize, gamma: f64, n1: usize, c2: usize, cb: usize) -> ContentConfig {
    ContentConfig::zipf(n, gamma, n1, c2, cb).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// A random valid network around the validation defaults.
pub fn random_net<R: rand::Rng>(rng: &mut R) -> NetworkParams {
    let m2 = rng.random_range(1..=12u32);
    let u2 = rng.random_range(1..=m2);
    let m1 = rng.random_range(1..=32u32);
    NetworkParams {
        m1,
        u1: m1,
        m2,
        u2,
        alpha1: rng.random_range(2.5..5.0),
        alpha2: rng.random_range(2.5..5.0),
        tau: 10f64.powf(rng.random_range(-1.0..1.0)),
        ..NetworkParams::validation_defaults()
    }
}

/// A random feasible policy over a random Zipf library: the cached set is a
/// random subset of the SBS-tier files with at least `C2` members, and `T`
/// is a random point of the box-simplex with positive entries.
pub fn random_instance<R: rand::Rng>(rng: &mut R) -> (ContentConfig, hetcache_core::CachingPolicy) {
    use rand::seq::SliceRandom;
    let n1 = rng.random_range(1..=5);
    let c2 = rng.random_range(1..=4);
    let n2 = rng.random_range(c2..=c2 + 6);
    let content = zipf(n1 + n2, rng.random_range(0.1..1.5), n1, c2, rng.random_range(0..=3));
    let nc = rng.random_range(c2..=n2);
    let mut files: Vec<usize> = content.tier2_files().collect();
    files.shuffle(rng);
    let mut nc_set = files[..nc].to_vec();
    nc_set.sort();
    let t = random_box_simplex(nc, c2, rng);
    let mu = rng.random_range(0.0..2.5);
    (content, hetcache_core::CachingPolicy::new(nc_set, t, mu))
}

/// A point of `{0 < T ≤ 1, Σ T = c2}`: a random positive vector rescaled
/// onto the sum, with entries that overshoot 1 capped and the rest rescaled
/// again.
pub fn random_box_simplex<R: rand::Rng>(n: usize, c2: usize, rng: &mut R) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    loop {
        let capped = t.iter().filter(|&&x| x >= 1.0).count() as f64;
        let free_sum: f64 = t.iter().filter(|&&x| x < 1.0).sum();
        let scale = (c2 as f64 - capped) / free_sum;
        let mut changed = false;
        for x in t.iter_mut().filter(|x| **x < 1.0) {
            *x = (*x * scale).min(1.0);
            changed |= *x == 1.0;
        }
        if !changed {
            return t;
        }
    }
}

/// Small random instance for the discrete-search oracle: `N2 ≤ 8` and a
/// random IN coefficient.
pub fn random_small_instance<R: rand::Rng>(rng: &mut R) -> (NetworkParams, ContentConfig, f64) {
    let net = random_net(rng);
    let c2 = rng.random_range(1..=4);
    let n2 = rng.random_range((c2 + 1).max(3)..=8);
    let n1 = rng.random_range(1..=4);
    let content = zipf(n1 + n2, rng.random_range(0.2..1.4), n1, c2, rng.random_range(0..=3));
    let mu = rng.random_range(0.0..2.0);
    (net, content, mu)
}

/// Random Toeplitz data `(T, w0, w, D)` with the structure of the SBS-tier
/// kernel: nonnegative off-diagonals with `Σ w_m ≤ w0`.
pub fn random_toeplitz<R: rand::Rng>(rng: &mut R, max_d: usize) -> (f64, f64, Vec<f64>, usize) {
    let d = rng.random_range(1..=max_d);
    let t = rng.random_range(0.01..1.0);
    let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
    let w0 = rng.random_range(0.0..3.0);
    let scale = w0 / raw.iter().sum::<f64>();
    (t, w0, raw[1..].iter().map(|v| v * scale).collect(), d)
}
