use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scarid_core::hilbert::BitString;
use scarid_core::idest::{
    lattice_volume, neighbor_counts, scan_profile, solve_ratio, volume_ratio, DistanceProfile, ScaleScan, ScanOptions,
};

/// Points of `Z^d` with L1 norm at most `t`, by brute force over the cube.
fn count_ball(t: i64, d: u32) -> u64 {
    let side = (2 * t + 1) as u64;
    (0..side.pow(d))
        .filter(|&code| {
            let mut c = code;
            let mut norm = 0;
            for _ in 0..d {
                norm += ((c % side) as i64 - t).abs();
                c /= side;
            }
            norm <= t
        })
        .count() as u64
}

#[test]
fn volume_matches_enumeration() {
    for t in 0..=6 {
        for d in 1..=6 {
            assert_eq!(lattice_volume(t, f64::from(d)), count_ball(i64::from(t), d) as f64, "t={t} d={d}");
        }
    }
}

#[test]
fn ratio_decreases_in_dimension() {
    for t2 in 2..=10u32 {
        let t1 = t2.div_ceil(2);
        let mut prev = volume_ratio(t1, t2, 0.01);
        for k in 1..=400 {
            let r = volume_ratio(t1, t2, 0.01 + k as f64 * 0.05);
            assert!(r < prev, "t1={t1} t2={t2} step {k}");
            prev = r;
        }
    }
}

proptest! {
    #[test]
    fn planted_dimension_is_recovered(d in 0.05f64..30.0, t2 in 2u32..12) {
        let t1 = t2.div_ceil(2);
        let est = solve_ratio(t1, t2, volume_ratio(t1, t2, d), 40.0);
        prop_assert!(!est.is_degenerate());
        prop_assert!((est.d_hat - d).abs() < 1e-6, "{} vs {}", est.d_hat, d);
    }

    #[test]
    fn counts_ignore_sample_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples: Vec<BitString> =
            (0..60).map(|_| BitString::new(rng.gen_range(0..1u64 << 10), 10).unwrap()).collect();
        let a = neighbor_counts(&samples, 2, 4).unwrap();
        samples.shuffle(&mut rng);
        let b = neighbor_counts(&samples, 2, 4).unwrap();
        prop_assert_eq!(a.mean_n, b.mean_n);
        prop_assert_eq!(a.mean_k, b.mean_k);
        let mut na = a.n.clone();
        let mut nb = b.n.clone();
        na.sort_unstable();
        nb.sort_unstable();
        prop_assert_eq!(na, nb);
    }
}

fn torus_points(count: usize, side: u32, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    (0..count).map(|_| (0..d).map(|_| rng.gen_range(0..side)).collect()).collect()
}

fn torus_profile(points: &[Vec<u32>], side: u32, max_radius: u32) -> DistanceProfile {
    DistanceProfile::from_points(points, max_radius, |a, b| {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                let diff = x.abs_diff(y);
                diff.min(side - diff)
            })
            .sum()
    })
}

fn options(bootstrap: usize) -> ScanOptions {
    ScanOptions { t2_values: (2..=5).collect(), upper: 20.0, bootstrap, ..ScanOptions::for_length(10) }
}

#[test]
fn uniform_torus_samples_give_their_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (d, side) in [(1usize, 400u32), (2, 60), (3, 20)] {
        let pts = torus_points(3000, side, d, &mut rng);
        let scan = scan_profile(&torus_profile(&pts, side, 5), &options(0), "torus").unwrap();
        assert!(!scan.no_plateau);
        assert!((scan.d_hat - d as f64).abs() < 0.1 * d as f64, "d={d}: {}", scan.d_hat);
    }
}

/// Band spanned by the bootstrap intervals of the plateau window.
fn plateau_band(scan: &ScaleScan) -> (f64, f64) {
    let p = scan.plateau.expect("plateau");
    scan.estimates[p.start..p.end]
        .iter()
        .map(|e| e.ci.unwrap())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, ci| (acc.0.min(ci.0), acc.1.max(ci.1)))
}

#[test]
fn estimate_does_not_depend_on_density() {
    for seed in 0..8 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sparse = torus_points(3000, 60, 2, &mut rng);
        let dense = torus_points(3000, 30, 2, &mut rng);
        let a = scan_profile(&torus_profile(&sparse, 60, 5), &options(200), "sparse").unwrap();
        let b = scan_profile(&torus_profile(&dense, 30, 5), &options(200), "dense").unwrap();
        let (ba, bb) = (plateau_band(&a), plateau_band(&b));
        assert!(ba.0 <= a.d_hat && a.d_hat <= ba.1);
        assert!(bb.0 <= b.d_hat && b.d_hat <= bb.1);
        assert!(ba.0 <= bb.1 && bb.0 <= ba.1, "seed {seed}: {:?} vs {:?}", ba, bb);
        assert!((a.d_hat - b.d_hat).abs() < 0.05);
    }
}

#[test]
fn identical_samples_are_degenerate() {
    let samples = vec![BitString::z2(10); 50];
    let counts = neighbor_counts(&samples, 2, 4).unwrap();
    assert!(solve_ratio(2, 4, counts.ratio(), 40.0).is_degenerate());
}
