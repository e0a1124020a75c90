//! Intrinsic dimension of discrete data on a lattice with the L1 (Hamming)
//! metric.
//!
//! For every point `i`, `n_i` counts other points within radius `t1` and
//! `k_i` those within `t2 > t1`. Conditioned on `k_i`, `n_i` is binomial with
//! success probability `V(t1, d) / V(t2, d)`, where `V(t, d)` is the number of
//! lattice points of `Z^d` within L1 distance `t`. The maximum-likelihood
//! dimension solves `V(t1, d) / V(t2, d) = <n> / <k>`; the density of the
//! data cancels from the ratio. Estimates are taken over a range of scales and
//! the reported value is read off the plateau.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{hamming_unchecked, BitString};
use crate::{Error, Result};

/// Lower end of the root bracket.
pub const MIN_DIMENSION: f64 = 1e-3;

/// Number of lattice points of `Z^d` within L1 distance `t`, continued to
/// real `d` as the degree-`t` polynomial
/// `V(t, d) = Σ_{k=0}^{t} 2^k C(t, k) C(d, k)`
/// with the generalized binomial `C(d, k) = d (d − 1) ⋯ (d − k + 1) / k!`.
pub fn lattice_volume(t: u32, d: f64) -> f64 {
    let mut total = 1.0;
    let mut binom_t = 1.0; // C(t, k)
    let mut binom_d = 1.0; // C(d, k)
    let mut pow2 = 1.0;
    for k in 0..t {
        let kf = k as f64;
        binom_t *= (t as f64 - kf) / (kf + 1.0);
        binom_d *= (d - kf) / (kf + 1.0);
        pow2 *= 2.0;
        total += pow2 * binom_t * binom_d;
    }
    total
}

/// `V(t1, d) / V(t2, d)`: the binomial success probability at dimension `d`.
pub fn volume_ratio(t1: u32, t2: u32, d: f64) -> f64 {
    lattice_volume(t1, d) / lattice_volume(t2, d)
}

/// Cumulative neighbour histograms of a point multiset.
///
/// Identical points are merged and carried with their multiplicity, so the
/// cost is quadratic in the number of distinct points.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    max_radius: u32,
    /// Multiplicity of each distinct point.
    multiplicity: Vec<u32>,
    /// `cumulative[u * (R + 1) + r]`: points (with multiplicity, the centre
    /// included) within distance `r` of distinct point `u`.
    cumulative: Vec<u32>,
    total: usize,
}

impl DistanceProfile {
    pub fn from_points<P: Ord + Clone>(points: &[P], max_radius: u32, metric: impl Fn(&P, &P) -> u32) -> Self {
        let mut sorted: Vec<P> = points.to_vec();
        sorted.sort_unstable();
        let mut distinct: Vec<P> = Vec::new();
        let mut multiplicity: Vec<u32> = Vec::new();
        for p in sorted {
            if distinct.last() == Some(&p) {
                *multiplicity.last_mut().unwrap() += 1;
            } else {
                distinct.push(p);
                multiplicity.push(1);
            }
        }
        let width = max_radius as usize + 1;
        let u = distinct.len();
        let mut hist = alloc::vec![0u32; u * width];
        for a in 0..u {
            hist[a * width] += multiplicity[a];
            for b in a + 1..u {
                let d = metric(&distinct[a], &distinct[b]);
                if d <= max_radius {
                    hist[a * width + d as usize] += multiplicity[b];
                    hist[b * width + d as usize] += multiplicity[a];
                }
            }
        }
        for row in hist.chunks_mut(width) {
            for r in 1..width {
                row[r] += row[r - 1];
            }
        }
        Self { max_radius, multiplicity, cumulative: hist, total: points.len() }
    }

    /// Bitstrings under the Hamming distance, radii up to the string length.
    pub fn from_bitstrings(samples: &[BitString]) -> Self {
        let len = samples.first().map_or(0, |s| s.len()) as u32;
        Self::from_points(samples, len, hamming_unchecked)
    }

    pub fn max_radius(&self) -> u32 {
        self.max_radius
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.multiplicity.len()
    }

    /// Per-point neighbour counts at radii `t1 < t2`.
    pub fn counts(&self, t1: u32, t2: u32) -> Result<NeighborCounts> {
        if t1 == 0 || t1 >= t2 || t2 > self.max_radius {
            return Err(Error::RadiiOutOfRange { t1, t2, max: self.max_radius });
        }
        let width = self.max_radius as usize + 1;
        let mut n = Vec::with_capacity(self.total);
        let mut k = Vec::with_capacity(self.total);
        for (u, &m) in self.multiplicity.iter().enumerate() {
            let row = &self.cumulative[u * width..(u + 1) * width];
            for _ in 0..m {
                n.push(row[t1 as usize] - 1);
                k.push(row[t2 as usize] - 1);
            }
        }
        Ok(NeighborCounts::new(t1, t2, n, k))
    }
}

/// Neighbour counts of every point at an inner and an outer radius. Counts
/// exclude the point itself but include its duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborCounts {
    pub t1: u32,
    pub t2: u32,
    pub n: Vec<u32>,
    pub k: Vec<u32>,
    pub mean_n: f64,
    pub mean_k: f64,
}

impl NeighborCounts {
    pub fn new(t1: u32, t2: u32, n: Vec<u32>, k: Vec<u32>) -> Self {
        let len = n.len().max(1) as f64;
        let mean_n = n.iter().map(|&x| x as f64).sum::<f64>() / len;
        let mean_k = k.iter().map(|&x| x as f64).sum::<f64>() / len;
        Self { t1, t2, n, k, mean_n, mean_k }
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    /// `<n> / <k>`.
    pub fn ratio(&self) -> f64 {
        self.mean_n / self.mean_k
    }
}

/// Neighbour counts of bitstring samples under the Hamming distance.
pub fn neighbor_counts(samples: &[BitString], t1: u32, t2: u32) -> Result<NeighborCounts> {
    if samples.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: samples.len() });
    }
    let len = samples[0].len();
    if let Some(s) = samples.iter().find(|s| s.len() != len) {
        return Err(Error::LengthMismatch { left: len, right: s.len() });
    }
    DistanceProfile::from_bitstrings(samples).counts(t1, t2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// No point has a neighbour within the outer radius.
    NoNeighbors,
    /// `<n>/<k>` is at or above the small-`d` limit: all mass sits inside the
    /// inner ball, which corresponds to `d → 0`.
    AllInside,
    /// The ratio is below the volume ratio at the top of the bracket.
    AboveBracket,
}

/// Dimension estimate at one `(t1, t2)` scale.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IdEstimate {
    pub t1: u32,
    pub t2: u32,
    pub d_hat: f64,
    pub ratio: f64,
    pub bracket: (f64, f64),
    pub ci: Option<(f64, f64)>,
    pub degenerate: Option<Degeneracy>,
}

impl IdEstimate {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate.is_some()
    }
}

/// Root of `V(t1, d) / V(t2, d) − ratio` on `[MIN_DIMENSION, upper]`; the
/// upper end is doubled once before giving up.
pub fn solve_ratio(t1: u32, t2: u32, ratio: f64, upper: f64) -> IdEstimate {
    let mut est = IdEstimate { t1, t2, d_hat: 0.0, ratio, bracket: (MIN_DIMENSION, upper), ci: None, degenerate: None };
    if !ratio.is_finite() {
        est.degenerate = Some(Degeneracy::NoNeighbors);
        return est;
    }
    let f = |d: f64| volume_ratio(t1, t2, d) - ratio;
    let mut lo = MIN_DIMENSION;
    if f(lo) <= 0.0 {
        est.degenerate = Some(Degeneracy::AllInside);
        return est;
    }
    let mut hi = upper;
    if f(hi) > 0.0 {
        hi *= 2.0;
        est.bracket.1 = hi;
        if f(hi) > 0.0 {
            est.d_hat = hi;
            est.degenerate = Some(Degeneracy::AboveBracket);
            return est;
        }
    }
    // f is decreasing in d: bisect until the bracket collapses
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    est.d_hat = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    est
}

/// Maximum-likelihood dimension for one set of counts.
pub fn solve_id(counts: &NeighborCounts, upper: f64) -> IdEstimate {
    if !(counts.mean_k > 0.0) {
        let mut e = solve_ratio(counts.t1, counts.t2, f64::NAN, upper);
        e.degenerate = Some(Degeneracy::NoNeighbors);
        return e;
    }
    solve_ratio(counts.t1, counts.t2, counts.ratio(), upper)
}

/// `Σ_i [ln C(k_i, n_i) + n_i ln p + (k_i − n_i) ln(1 − p)]` with
/// `p = V(t1, d) / V(t2, d)`.
pub fn binomial_log_likelihood(counts: &NeighborCounts, d: f64) -> Result<f64> {
    let p = volume_ratio(counts.t1, counts.t2, d);
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let (lp, lq) = (libm::log(p), libm::log1p(-p));
    Ok(counts
        .n
        .iter()
        .zip(&counts.k)
        .map(|(&n, &k)| {
            let (n, k) = (n as f64, k as f64);
            ln_binomial(k, n) + n * lp + (k - n) * lq
        })
        .sum())
}

fn ln_binomial(k: f64, n: f64) -> f64 {
    libm::lgamma(k + 1.0) - libm::lgamma(n + 1.0) - libm::lgamma(k - n + 1.0)
}

/// Percentile band of the estimate under resampling of points (their counts
/// held fixed) with replacement.
pub fn bootstrap_interval(
    counts: &NeighborCounts,
    upper: f64,
    resamples: usize,
    band: (f64, f64),
    rng: &mut impl Rng,
) -> Option<(f64, f64)> {
    let len = counts.len();
    if resamples == 0 || len == 0 {
        return None;
    }
    let mut draws = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let (mut sn, mut sk) = (0u64, 0u64);
        for _ in 0..len {
            let i = rng.gen_range(0..len);
            sn += counts.n[i] as u64;
            sk += counts.k[i] as u64;
        }
        if sk == 0 {
            continue;
        }
        let e = solve_ratio(counts.t1, counts.t2, sn as f64 / sk as f64, upper);
        if !e.is_degenerate() {
            draws.push(e.d_hat);
        }
    }
    if draws.is_empty() {
        return None;
    }
    let sorted = crate::stats::sorted(&draws);
    Some((crate::stats::quantile_sorted(&sorted, band.0), crate::stats::quantile_sorted(&sorted, band.1)))
}

/// Operational rule for "the value where the estimates plateau".
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PlateauRule {
    pub min_window: usize,
    pub tolerance: f64,
}

impl Default for PlateauRule {
    fn default() -> Self {
        Self { min_window: 3, tolerance: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanOptions {
    /// Outer radii to probe; each is paired with `t1 = ceil(t2 / 2)`.
    pub t2_values: Vec<u32>,
    pub plateau: PlateauRule,
    /// Upper end of the root bracket.
    pub upper: f64,
    pub bootstrap: usize,
    pub ci_band: (f64, f64),
    pub seed: u64,
}

impl ScanOptions {
    /// Defaults for bitstrings of `len` sites: [`default_t2_values`], bracket
    /// `4 len`, no bootstrap.
    pub fn for_length(len: usize) -> Self {
        Self {
            t2_values: default_t2_values(len),
            plateau: PlateauRule::default(),
            upper: 4.0 * len as f64,
            bootstrap: 0,
            ci_band: (0.16, 0.84),
            seed: 0,
        }
    }
}

/// Selected window `estimates[start..end]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Plateau {
    pub start: usize,
    /// One past the last estimate of the window.
    pub end: usize,
    pub d_hat: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScaleScan {
    /// Every probed scale in order of `t2`, degenerate ones included and flagged.
    pub estimates: Vec<IdEstimate>,
    pub plateau: Option<Plateau>,
    /// Plateau median, or the smallest non-degenerate scale when no window qualifies.
    pub d_hat: f64,
    pub no_plateau: bool,
}

/// Outer radii `2..=max(2, len / 2)`. Past half the string length the outer
/// ball holds nearly every sample and the estimates collapse towards zero.
pub fn default_t2_values(len: usize) -> Vec<u32> {
    (2..=(len as u32 / 2).max(2)).collect()
}

/// Smaller radius paired with `t2`.
pub fn inner_radius(t2: u32) -> u32 {
    t2.div_ceil(2)
}

/// Estimate the dimension over a range of scales and read off the plateau.
pub fn scan_profile(profile: &DistanceProfile, options: &ScanOptions, label: &str) -> Result<ScaleScan> {
    let mut estimates = Vec::new();
    for &t2 in &options.t2_values {
        let t1 = inner_radius(t2);
        if t1 >= t2 || t2 > profile.max_radius() {
            continue;
        }
        let counts = profile.counts(t1, t2)?;
        let mut est = solve_id(&counts, options.upper);
        if options.bootstrap > 0 && !est.is_degenerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(t2 as u64);
            est.ci = bootstrap_interval(&counts, options.upper, options.bootstrap, options.ci_band, &mut rng);
        }
        estimates.push(est);
    }
    select_plateau(estimates, options.plateau, label)
}

/// Apply the plateau rule to an ordered list of estimates.
pub fn select_plateau(estimates: Vec<IdEstimate>, rule: PlateauRule, label: &str) -> Result<ScaleScan> {
    let Some(first_ok) = estimates.iter().position(|e| !e.is_degenerate()) else {
        return Err(Error::AllScalesDegenerate(String::from(label)));
    };
    let mut best: Option<(usize, usize)> = None;
    for start in 0..estimates.len() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (end, e) in estimates.iter().enumerate().skip(start) {
            if e.is_degenerate() {
                break;
            }
            lo = lo.min(e.d_hat);
            hi = hi.max(e.d_hat);
            if hi - lo >= rule.tolerance {
                break;
            }
            let width = end + 1 - start;
            if width >= rule.min_window.max(1) && best.is_none_or(|(s, e)| width > e - s) {
                best = Some((start, end + 1));
            }
        }
    }
    match best {
        Some((start, end)) => {
            let window: Vec<f64> = estimates[start..end].iter().map(|e| e.d_hat).collect();
            let d_hat = crate::stats::median(&window);
            Ok(ScaleScan { estimates, plateau: Some(Plateau { start, end, d_hat }), d_hat, no_plateau: false })
        }
        None => {
            let d_hat = estimates[first_ok].d_hat;
            Ok(ScaleScan { estimates, plateau: None, d_hat, no_plateau: true })
        }
    }
}

/// [`scan_profile`] over bitstring samples.
pub fn scan_scales(samples: &[BitString], options: &ScanOptions, label: &str) -> Result<ScaleScan> {
    if samples.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    scan_profile(&DistanceProfile::from_bitstrings(samples), options, label)
}
