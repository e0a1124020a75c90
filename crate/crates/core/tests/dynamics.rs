use scarid_core::dynamics::{
    build_pxp, diagonalize, domain_wall_density, evolve, fidelity, quench, revival_peaks, Complex64, StateVector,
};
use scarid_core::hilbert::{enumerate_basis, BitString, Boundary};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Dense = Vec<Vec<f64>>;

/// PXP matrix rebuilt from the flip rule on a brute-force basis.
fn oracle_hamiltonian(len: usize, boundary: Boundary) -> (Vec<u64>, Dense) {
    let valid = |x: u64| {
        let pairs = if boundary == Boundary::Periodic { len } else { len - 1 };
        (0..pairs).all(|i| !((x >> i) & 1 == 1 && (x >> ((i + 1) % len)) & 1 == 1))
    };
    let states: Vec<u64> = (0u64..1 << len).filter(|&x| valid(x)).collect();
    let d = states.len();
    let mut h = vec![vec![0.0; d]; d];
    for (j, &s) in states.iter().enumerate() {
        for site in 0..len {
            let t = s ^ (1 << site);
            if let Ok(i) = states.binary_search(&t) {
                h[i][j] = 1.0;
            }
        }
    }
    (states, h)
}

/// `-i H v`.
fn deriv(h: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    h.iter().map(|row| row.iter().zip(v).map(|(&a, &x)| x * a).sum::<Complex64>() * Complex64::new(0.0, -1.0)).collect()
}

fn axpy(v: &[Complex64], k: &[Complex64], a: f64) -> Vec<Complex64> {
    v.iter().zip(k).map(|(x, y)| x + y * a).collect()
}

fn rk4(h: &Dense, v0: &[Complex64], t: f64, dt: f64) -> Vec<Complex64> {
    let steps = (t / dt).round() as usize;
    let mut v = v0.to_vec();
    for _ in 0..steps {
        let k1 = deriv(h, &v);
        let k2 = deriv(h, &axpy(&v, &k1, dt / 2.0));
        let k3 = deriv(h, &axpy(&v, &k2, dt / 2.0));
        let k4 = deriv(h, &axpy(&v, &k3, dt));
        for i in 0..v.len() {
            v[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    v
}

fn l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn matches_rk4_propagator_for_small_chains() {
    for boundary in [Boundary::Periodic, Boundary::Open] {
        for len in 3..=6 {
            let basis = enumerate_basis(len, boundary).unwrap();
            let (states, h) = oracle_hamiltonian(len, boundary);
            assert_eq!(states, basis.states().iter().map(BitString::bits).collect::<Vec<_>>());
            let eig = diagonalize(&build_pxp(&basis, 1.0)).unwrap();
            for &start in &[0usize, basis.dim() / 2, basis.dim() - 1] {
                let bits = basis.state(start);
                let traj = quench(&basis, &eig, bits, &[1.0, 2.5]).unwrap();
                let mut v0 = vec![Complex64::new(0.0, 0.0); basis.dim()];
                v0[start] = Complex64::new(1.0, 0.0);
                for (t, s) in traj.times.iter().zip(&traj.states) {
                    let want = rk4(&h, &v0, *t, 1e-3);
                    assert!(l2(&s.amplitudes, &want) < 1e-5, "L={len} {boundary:?} start={bits} t={t}");
                }
            }
        }
    }
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let amps = (0..dim).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    StateVector::from_amplitudes(amps).normalized()
}

#[test]
fn energy_is_conserved() {
    let basis = enumerate_basis(10, Boundary::Periodic).unwrap();
    let h = build_pxp(&basis, 1.0);
    let eig = diagonalize(&h).unwrap();
    let times: Vec<f64> = (1..=40).map(|k| k as f64 * 0.75).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut initials: Vec<StateVector> = [BitString::z2(10), BitString::ground(10), BitString::z3(10)]
        .iter()
        .map(|b| StateVector::basis_state(&basis, b).unwrap())
        .collect();
    initials.push(random_state(basis.dim(), &mut rng));
    for psi0 in initials {
        let e0 = h.expectation(&psi0);
        for s in evolve(&eig, &psi0, &times).unwrap().states {
            assert!((h.expectation(&s) - e0).abs() < 1e-8);
            assert!((s.norm() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn evolution_is_linear() {
    let basis = enumerate_basis(8, Boundary::Periodic).unwrap();
    let eig = diagonalize(&build_pxp(&basis, 1.3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let times = [0.4, 2.0, 7.5];
    for _ in 0..10 {
        let a = random_state(basis.dim(), &mut rng);
        let b = random_state(basis.dim(), &mut rng);
        let (ca, cb) = (Complex64::new(0.3, -0.8), Complex64::new(-1.1, 0.2));
        let mix = StateVector::from_amplitudes(
            a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| ca * x + cb * y).collect(),
        );
        let ea = evolve(&eig, &a, &times).unwrap();
        let eb = evolve(&eig, &b, &times).unwrap();
        let em = evolve(&eig, &mix, &times).unwrap();
        for k in 0..times.len() {
            let want: Vec<Complex64> =
                ea.states[k].amplitudes.iter().zip(&eb.states[k].amplitudes).map(|(x, y)| ca * x + cb * y).collect();
            assert!(l2(&em.states[k].amplitudes, &want) < 1e-9);
        }
    }
}

#[test]
fn domain_walls_count_ground_pairs_on_valid_strings() {
    let basis = enumerate_basis(12, Boundary::Periodic).unwrap();
    for s in basis.states() {
        let zeros = (0..12).filter(|&i| !s.get(i) && !s.get((i + 1) % 12)).count();
        assert_eq!(domain_wall_density(s, Boundary::Periodic), zeros as f64 / 12.0);
    }
}

/// `exp(-i H dt)` by a Taylor series; `‖H dt‖ ≤ 0.2` here, so 30 terms reach machine precision.
fn taylor_step(h: &Dense, dt: f64) -> Vec<Vec<Complex64>> {
    let d = h.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    let mut term: Vec<Vec<Complex64>> =
        (0..d).map(|i| (0..d).map(|j| Complex64::new(f64::from(u8::from(i == j)), 0.0)).collect()).collect();
    for k in 0..30 {
        for i in 0..d {
            for j in 0..d {
                out[i][j] += term[i][j];
            }
        }
        let scale = Complex64::new(0.0, -dt / (k + 1) as f64);
        let next: Vec<Vec<Complex64>> = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|m| term[i][m] * h[m][j]).sum::<Complex64>() * scale).collect())
            .collect();
        term = next;
    }
    out
}

#[test]
fn z2_fidelity_revival_matches_matrix_exponential() {
    let basis = enumerate_basis(10, Boundary::Periodic).unwrap();
    let eig = diagonalize(&build_pxp(&basis, 1.0)).unwrap();
    let (_, h) = oracle_hamiltonian(10, Boundary::Periodic);
    let dt = 0.02;
    let u = taylor_step(&h, dt);
    let z2 = basis.index_of(&BitString::z2(10)).unwrap();
    let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
    v[z2] = Complex64::new(1.0, 0.0);
    let times: Vec<f64> = (1..=400).map(|k| k as f64 * dt).collect();
    let traj = quench(&basis, &eig, BitString::z2(10), &times).unwrap();
    let psi0 = StateVector::basis_state(&basis, &BitString::z2(10)).unwrap();
    let mut best = (0.0, 0.0);
    for (t, s) in times.iter().zip(&traj.states) {
        v = (0..v.len()).map(|i| (0..v.len()).map(|j| u[i][j] * v[j]).sum()).collect();
        let oracle = v[z2].norm_sqr();
        let exact = fidelity(&psi0, s).unwrap();
        assert!((oracle - exact).abs() < 1e-10, "t={t}");
        if *t > 2.0 && exact > best.1 {
            best = (*t, exact);
        }
    }
    assert!(best.1 > 0.5, "max fidelity on (2, 8] is {best:?}");
}

#[test]
fn z2_has_at_least_three_revivals_up_to_t30() {
    let basis = enumerate_basis(10, Boundary::Periodic).unwrap();
    let eig = diagonalize(&build_pxp(&basis, 1.0)).unwrap();
    let times: Vec<f64> = (1..=3000).map(|k| k as f64 * 0.01).collect();
    let traj = quench(&basis, &eig, BitString::z2(10), &times).unwrap();
    let psi0 = StateVector::basis_state(&basis, &BitString::z2(10)).unwrap();
    let series: Vec<(f64, f64)> =
        times.iter().zip(&traj.states).map(|(t, s)| (*t, fidelity(&psi0, s).unwrap())).collect();
    assert!(revival_peaks(&series, 0.5).len() >= 3);
}

#[test]
fn polarized_state_fidelity_at_t10() {
    let basis = enumerate_basis(10, Boundary::Periodic).unwrap();
    let eig = diagonalize(&build_pxp(&basis, 1.0)).unwrap();
    let traj = quench(&basis, &eig, BitString::ground(10), &[10.0]).unwrap();
    let psi0 = StateVector::basis_state(&basis, &BitString::ground(10)).unwrap();
    let f = fidelity(&psi0, &traj.states[0]).unwrap();
    // independent scipy expm reference: 0.19679582017132563
    assert!((f - 0.196_795_820_171_325_63).abs() < 1e-9);
    assert!(f < 0.2);
}
