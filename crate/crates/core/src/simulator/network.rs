//! One network snapshot: layout, association, IN requests and SIR draws.

use rand::Rng;

use super::caching::{realize_caches, CacheRealization};
use super::geometry::{poisson_count, sample_ppp, GridIndex, Point, Window};
use crate::error::Result;
use crate::params::{CachingPolicy, ContentConfig, NetworkParams};

/// `Γ(k, 1)` for integer `k >= 1`, as a sum of exponentials.
#[inline]
pub fn gamma_int<R: Rng + ?Sized>(k: u32, rng: &mut R) -> f64 {
    let mut total = 0.0;
    let mut left = k;
    while left > 0 {
        let chunk = left.min(8);
        let mut prod = 1.0;
        for _ in 0..chunk {
            // (0, 1] keeps the logarithm finite
            prod *= 1.0 - rng.random::<f64>();
        }
        total -= prod.ln();
        left -= chunk;
    }
    total
}

/// Base stations and cache contents of one realization.
#[derive(Debug, Clone)]
pub struct Layout {
    pub window: Window,
    pub sbs: Vec<Point>,
    pub mbs: Vec<Point>,
    pub caches: CacheRealization,
    pub sbs_grid: GridIndex,
    pub mbs_grid: GridIndex,
    /// Per position in the cached set: the SBSs holding that file.
    pub file_grids: Vec<GridIndex>,
}

impl Layout {
    pub fn sample<R: Rng + ?Sized>(net: &NetworkParams, policy: &CachingPolicy, c2: usize, window: Window, rng: &mut R) -> Result<Self> {
        let sbs = sample_ppp(net.lambda2, &window, rng);
        let mbs = sample_ppp(net.lambda1, &window, rng);
        let caches = realize_caches(sbs.len(), &policy.t, c2, rng)?;
        Ok(Self::from_parts(window, sbs, mbs, caches, policy.nc()))
    }

    pub fn from_parts(window: Window, sbs: Vec<Point>, mbs: Vec<Point>, caches: CacheRealization, nc: usize) -> Self {
        let sbs_grid = GridIndex::build(&window, &sbs, 0..sbs.len() as u32);
        let mbs_grid = GridIndex::build(&window, &mbs, 0..mbs.len() as u32);
        let mut holders: Vec<Vec<u32>> = vec![Vec::new(); nc];
        for s in 0..caches.sbs_count() {
            for &f in caches.files_of(s) {
                holders[f as usize].push(s as u32);
            }
        }
        let file_grids = holders
            .iter()
            .map(|ids| GridIndex::build(&window, &sbs, ids.iter().copied()))
            .collect();
        Self { window, sbs, mbs, caches, sbs_grid, mbs_grid, file_grids }
    }
}

/// An SBS-user selected for service.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServedUser {
    pub pos: Point,
    pub sbs: u32,
    /// Distance to the serving SBS.
    pub dist: f64,
    /// Position of the requested file in the cached set.
    pub file: u16,
}

/// Result of content-centric association and per-BS user selection.
#[derive(Debug, Clone, Default)]
pub struct Service {
    pub served: Vec<ServedUser>,
    /// Users associated with each SBS before selection.
    pub candidates: Vec<u32>,
    /// Users whose requested file is cached nowhere in the window.
    pub dropped: usize,
    /// Per MBS, a bitset over backhaul files requested by its users.
    pub backhaul_requests: Vec<u64>,
    pub backhaul_words: usize,
}

impl Service {
    /// Distinct backhaul files requested at `mbs`, counting `extra` too.
    pub fn backhaul_load_with(&self, mbs: usize, extra: usize) -> usize {
        let words = &self.backhaul_requests[mbs * self.backhaul_words..(mbs + 1) * self.backhaul_words];
        let base: u32 = words.iter().map(|w| w.count_ones()).sum();
        let has_extra = words[extra / 64] >> (extra % 64) & 1 == 1;
        base as usize + usize::from(!has_extra)
    }
}

/// Generates users of SBS-cached and backhaul files, attaches them, and
/// lets every SBS pick `U2` of its candidates uniformly.
///
/// MBS-cached requests are not generated: MBS user selection has no effect on
/// the SBS tier or on a typical user's SIR.
/// SBS-users only: each user attaches to the nearest SBS caching its file
/// and every SBS keeps `U2` of its candidates uniformly at random.
pub fn associate_sbs_users<R: Rng + ?Sized>(
    layout: &Layout,
    net: &NetworkParams,
    content: &ContentConfig,
    policy: &CachingPolicy,
    rng: &mut R,
) -> Service {
    let area = layout.window.area();
    let u2 = net.u2 as usize;
    let n_sbs = layout.sbs.len();
    let mut candidates = vec![0u32; n_sbs];
    // per SBS, the U2 candidates with the smallest random keys
    let mut keep: Vec<(u64, ServedUser)> = vec![(u64::MAX, ServedUser { pos: Point::default(), sbs: 0, dist: 0.0, file: 0 }); n_sbs * u2];
    let mut dropped = 0;
    for (j, &file) in policy.nc_set.iter().enumerate() {
        let n = poisson_count(net.lambda_u * content.popularity[file] * area, rng);
        let grid = &layout.file_grids[j];
        for _ in 0..n {
            let pos = layout.window.sample_uniform(rng);
            let key: u64 = rng.random();
            let Some((s, d2)) = grid.nearest(&layout.sbs, &pos) else {
                dropped += 1;
                continue;
            };
            let s = s as usize;
            candidates[s] += 1;
            let slots = &mut keep[s * u2..(s + 1) * u2];
            let (worst, _) = slots.iter().enumerate().max_by_key(|(_, e)| e.0).expect("U2 >= 1");
            if key < slots[worst].0 {
                slots[worst] = (key, ServedUser { pos, sbs: s as u32, dist: d2.sqrt(), file: j as u16 });
            }
        }
    }
    let served = keep.into_iter().filter(|e| e.0 != u64::MAX).map(|e| e.1).collect();
    Service { served, candidates, dropped, backhaul_requests: Vec::new(), backhaul_words: 0 }
}

/// Content-centric association and per-BS user selection, followed by the
/// backhaul requests seen by every MBS.
pub fn associate_and_serve<R: Rng + ?Sized>(
    layout: &Layout,
    net: &NetworkParams,
    content: &ContentConfig,
    policy: &CachingPolicy,
    rng: &mut R,
) -> Service {
    let mut service = associate_sbs_users(layout, net, content, policy, rng);
    let area = layout.window.area();
    let backhaul = policy.backhaul_set(content);
    let words = backhaul.len().div_ceil(64).max(1);
    let mut backhaul_requests = vec![0u64; layout.mbs.len() * words];
    if content.cb < backhaul.len() {
        for (b, &file) in backhaul.iter().enumerate() {
            let n = poisson_count(net.lambda_u * content.popularity[file] * area, rng);
            for _ in 0..n {
                let pos = layout.window.sample_uniform(rng);
                if let Some((m, _)) = layout.mbs_grid.nearest(&layout.mbs, &pos) {
                    backhaul_requests[m as usize * words + b / 64] |= 1 << (b % 64);
                }
            }
        }
    }
    service.backhaul_requests = backhaul_requests;
    service.backhaul_words = words;
    service
}

/// IN requests and grants of one snapshot.
#[derive(Debug, Clone, Default)]
pub struct InOutcome {
    /// Requests received by each SBS.
    pub theta: Vec<u32>,
    /// `(served user, SBS)` pairs, grouped by SBS.
    pub requests: Vec<(u32, u32)>,
    pub granted: Vec<bool>,
}

/// Calls `f(sbs)` for every non-serving SBS within `μ Z2` of `user`.
#[inline]
fn for_each_request(layout: &Layout, user: &ServedUser, mu: f64, mut f: impl FnMut(u32)) {
    layout.sbs_grid.for_each_within(&layout.sbs, &user.pos, mu * user.dist, |x, _| {
        if x != user.sbs {
            f(x);
        }
    });
}

/// Number of IN requests each SBS receives.
pub fn count_requests(layout: &Layout, served: &[ServedUser], mu: f64) -> Vec<u32> {
    let mut theta = vec![0u32; layout.sbs.len()];
    for u in served {
        for_each_request(layout, u, mu, |x| theta[x as usize] += 1);
    }
    theta
}

/// Every served user asks all non-serving SBSs within `μ Z2` to null; each
/// SBS grants `min(Θ, M2 - U2)` of its requests uniformly at random.
pub fn in_protocol<R: Rng + ?Sized>(layout: &Layout, served: &[ServedUser], mu: f64, null_dof: u32, rng: &mut R) -> InOutcome {
    let mut requests = Vec::new();
    for (i, u) in served.iter().enumerate() {
        for_each_request(layout, u, mu, |x| requests.push((i as u32, x)));
    }
    requests.sort_by_key(|&(u, x)| (x, u));
    let mut theta = vec![0u32; layout.sbs.len()];
    let mut granted = vec![false; requests.len()];
    let mut start = 0;
    while start < requests.len() {
        let x = requests[start].1;
        let mut end = start;
        while end < requests.len() && requests[end].1 == x {
            end += 1;
        }
        let count = end - start;
        theta[x as usize] = count as u32;
        let grant = count.min(null_dof as usize);
        if grant == count {
            granted[start..end].iter_mut().for_each(|g| *g = true);
        } else if grant > 0 {
            for idx in rand::seq::index::sample(rng, count, grant) {
                granted[start + idx] = true;
            }
        }
        start = end;
    }
    InOutcome { theta, requests, granted }
}

/// What a typical user at a fixed location experiences for every file.
#[derive(Debug, Clone, Default)]
pub struct ProbeOutcome {
    /// SIR if served by the nearest MBS; `None` when the window has no MBS.
    pub sir_mbs: Option<f64>,
    /// MBS-tier request mass weighted by backhaul retrieval probability.
    pub mbs_weight: f64,
    /// Per position in the cached set: SIR from the content-centric server,
    /// or `None` if no SBS in the window caches the file.
    pub sir_sbs: Vec<Option<f64>>,
}

/// Reusable per-worker buffers.
#[derive(Debug, Default)]
pub struct ProbeScratch {
    power: Vec<f64>,
}

/// Evaluates a typical user at `pos` against every cached file.
///
/// Interferer gains are drawn once and shared across files; the typical
/// user's own IN requests succeed with probability `min(1, (M2-U2)/(Θ+1))`.
#[allow(clippy::too_many_arguments)]
pub fn probe<R: Rng + ?Sized, S: Rng + ?Sized>(
    layout: &Layout,
    service: &Service,
    theta: &[u32],
    net: &NetworkParams,
    content: &ContentConfig,
    policy: &CachingPolicy,
    pos: Point,
    rng: &mut R,
    rng_in: &mut S,
    scratch: &mut ProbeScratch,
) -> ProbeOutcome {
    let mut out = ProbeOutcome { sir_sbs: Vec::with_capacity(policy.nc()), ..Default::default() };
    let null_dof = net.null_dof();

    // SBS tier
    let half_alpha2 = net.alpha2 / 2.0;
    scratch.power.clear();
    let mut total = 0.0;
    for p in &layout.sbs {
        let d2 = p.dist2(&pos);
        let pw = gamma_int(net.u2, rng) * path_gain(d2, half_alpha2);
        scratch.power.push(pw);
        total += pw;
    }
    for grid in &layout.file_grids {
        let Some((s, z2)) = grid.nearest(&layout.sbs, &pos) else {
            out.sir_sbs.push(None);
            continue;
        };
        let z = z2.sqrt();
        let mut interference = total - scratch.power[s as usize];
        layout.sbs_grid.for_each_within(&layout.sbs, &pos, policy.mu * z, |x, _| {
            if x == s {
                return;
            }
            let p_grant = (null_dof as f64 / (theta[x as usize] as f64 + 1.0)).min(1.0);
            if p_grant >= 1.0 || (p_grant > 0.0 && rng_in.random::<f64>() < p_grant) {
                interference -= scratch.power[x as usize];
            }
        });
        let used = theta[s as usize].min(null_dof);
        let d = (null_dof + 1 - used).max(1);
        let signal = gamma_int(d, rng) * path_gain(z2, half_alpha2);
        out.sir_sbs.push(Some(sir(signal, interference.max(0.0))));
    }

    // MBS tier
    if let Some((m, z2)) = layout.mbs_grid.nearest(&layout.mbs, &pos) {
        let half_alpha1 = net.alpha1 / 2.0;
        let mut interference = 0.0;
        for (i, p) in layout.mbs.iter().enumerate() {
            if i != m as usize {
                interference += gamma_int(net.u1, rng) * path_gain(p.dist2(&pos), half_alpha1);
            }
        }
        let signal = gamma_int(1, rng) * path_gain(z2, half_alpha1);
        out.sir_mbs = Some(sir(signal, interference));

        let backhaul = policy.backhaul_set(content);
        let mut weight = content.mbs_mass();
        for (b, &file) in backhaul.iter().enumerate() {
            let p = if content.cb >= backhaul.len() {
                1.0
            } else {
                (content.cb as f64 / service.backhaul_load_with(m as usize, b) as f64).min(1.0)
            };
            weight += content.popularity[file] * p;
        }
        out.mbs_weight = weight;
    }
    out
}

#[inline]
fn path_gain(d2: f64, half_alpha: f64) -> f64 {
    if half_alpha == 2.0 {
        1.0 / (d2 * d2)
    } else {
        d2.powf(-half_alpha)
    }
}

#[inline]
fn sir(signal: f64, interference: f64) -> f64 {
    if interference > 0.0 {
        signal / interference
    } else {
        f64::INFINITY
    }
}
