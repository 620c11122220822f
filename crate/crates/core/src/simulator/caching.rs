//! Random cache placement with prescribed per-file marginals.

use rand::Rng;

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-8;

/// Per-SBS cache contents: `c2` positions into the policy's cached set for
/// every SBS, stored contiguously.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CacheRealization {
    pub c2: usize,
    pub slots: Vec<u16>,
}

impl CacheRealization {
    pub fn sbs_count(&self) -> usize {
        if self.c2 == 0 {
            0
        } else {
            self.slots.len() / self.c2
        }
    }

    pub fn files_of(&self, sbs: usize) -> &[u16] {
        &self.slots[sbs * self.c2..(sbs + 1) * self.c2]
    }
}

/// Checks `0 <= T_n <= 1` and `Σ T_n = c2`.
pub fn check_marginals(t: &[f64], c2: usize) -> Result<()> {
    if t.iter().any(|&x| !(0.0..=1.0 + 1e-12).contains(&x)) {
        return Err(Error::InfeasibleMarginals("caching probabilities must lie in [0, 1]".into()));
    }
    let sum: f64 = t.iter().sum();
    if (sum - c2 as f64).abs() > SUM_TOL {
        return Err(Error::InfeasibleMarginals(format!("probabilities sum to {sum}, expected {c2}")));
    }
    if t.len() > u16::MAX as usize {
        return Err(Error::InfeasibleMarginals("too many cached files".into()));
    }
    Ok(())
}

/// Fills `out` with the `c2` distinct positions selected by offset `u`.
///
/// The probabilities are laid end to end on `[0, c2)`; the points
/// `u, u+1, …, u+c2-1` each fall in a different segment because no segment
/// is longer than one, so file `n` is picked with probability exactly `T_n`.
pub fn interval_pick(t: &[f64], c2: usize, u: f64, out: &mut Vec<u16>) {
    let start = out.len();
    let mut i = 0usize;
    let mut edge = 0.0;
    for k in 0..c2 {
        let target = u + k as f64;
        while i + 1 < t.len() && edge + t[i] <= target {
            edge += t[i];
            i += 1;
        }
        let mut pick = i;
        // rounding can push the last point past the end of the final segment
        while out[start..].contains(&(pick as u16)) || t[pick] == 0.0 {
            pick = pick.checked_sub(1).expect("marginals were validated");
        }
        out.push(pick as u16);
    }
    out[start..].sort_unstable();
}

/// Draws the cache of every SBS independently.
pub fn realize_caches<R: Rng + ?Sized>(sbs_count: usize, t: &[f64], c2: usize, rng: &mut R) -> Result<CacheRealization> {
    check_marginals(t, c2)?;
    let mut slots = Vec::with_capacity(sbs_count * c2);
    for _ in 0..sbs_count {
        let start = slots.len();
        interval_pick(t, c2, rng.random::<f64>(), &mut slots);
        debug_assert_eq!(slots.len() - start, c2);
    }
    Ok(CacheRealization { c2, slots })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // rightmost position that can still move
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Largest number of combinations accepted by [`solve_pi_least_squares`].
pub const MAX_COMBINATIONS: u128 = 10_000;

fn binom_u128(n: usize, k: usize) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

/// Least-squares combination probabilities `p_i` over the lexicographically
/// ordered `c2`-subsets of the cached set, subject to `p` lying on the
/// probability simplex. Solved by projected gradient from the uniform point.
pub fn solve_pi_least_squares(t: &[f64], c2: usize) -> Result<(Vec<Vec<usize>>, Vec<f64>)> {
    let nc = t.len();
    if c2 == 0 || c2 > nc {
        return Err(crate::error::invalid(format!("need 1 <= C2 <= N_c, got C2={c2}, N_c={nc}")));
    }
    let count = binom_u128(nc, c2);
    if count > MAX_COMBINATIONS {
        return Err(Error::InstanceTooLarge { count, cap: MAX_COMBINATIONS });
    }
    let combos = combinations(nc, c2);
    let m = combos.len();
    let mut p = vec![1.0 / m as f64; m];
    // ||A||_2^2 <= ||A||_1 ||A||_inf for the 0/1 incidence matrix
    let per_file = binom_u128(nc - 1, c2 - 1) as f64;
    let step = 1.0 / (c2 as f64 * per_file);
    let mut resid = vec![0.0; nc];
    let mut y = vec![0.0; m];
    for _ in 0..200_000 {
        resid.iter_mut().zip(t).for_each(|(r, &ti)| *r = -ti);
        for (combo, &pi) in combos.iter().zip(&p) {
            for &n in combo {
                resid[n] += pi;
            }
        }
        let mut moved = 0.0f64;
        for (j, combo) in combos.iter().enumerate() {
            let g: f64 = combo.iter().map(|&n| resid[n]).sum();
            y[j] = p[j] - step * g;
        }
        let proj = project_simplex(&y);
        for (pj, qj) in p.iter_mut().zip(&proj) {
            moved = moved.max((*pj - qj).abs());
            *pj = *qj;
        }
        if moved < 1e-15 {
            break;
        }
    }
    Ok((combos, p))
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut s = y.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &v) in s.iter().enumerate() {
        cum += v;
        let cand = (cum - 1.0) / (i + 1) as f64;
        if v - cand > 0.0 {
            theta = cand;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interval_method_gives_distinct_files() {
        let t = [0.9, 0.8, 0.7, 0.6];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = realize_caches(1000, &t, 3, &mut rng).unwrap();
        for s in 0..r.sbs_count() {
            let f = r.files_of(s);
            assert!(f[0] < f[1] && f[1] < f[2]);
        }
    }

    #[test]
    fn deterministic_cache_when_marginals_are_binary() {
        let t = [1.0, 0.0, 1.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = realize_caches(50, &t, 2, &mut rng).unwrap();
        assert!((0..50).all(|s| r.files_of(s) == [0, 2]));
    }

    #[test]
    fn rejects_bad_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(realize_caches(1, &[1.2, 0.8], 2, &mut rng), Err(Error::InfeasibleMarginals(_))));
        assert!(matches!(realize_caches(1, &[0.5, 0.8], 2, &mut rng), Err(Error::InfeasibleMarginals(_))));
    }

    #[test]
    fn combinations_are_lexicographic() {
        let c = combinations(4, 3);
        assert_eq!(c, vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]]);
        assert_eq!(combinations(5, 5).len(), 1);
        assert_eq!(combinations(6, 2).len(), 15);
    }

    #[test]
    fn single_combination() {
        let (c, p) = solve_pi_least_squares(&[1.0, 1.0, 1.0], 3).unwrap();
        assert_eq!(c.len(), 1);
        assert!((p[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_many_combinations() {
        let t = vec![0.5; 30];
        assert!(matches!(solve_pi_least_squares(&t, 15), Err(Error::InstanceTooLarge { .. })));
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }
}
