//! PXP Hamiltonian, exact diagonalization and quench dynamics.

use alloc::vec::Vec;

use nalgebra::DMatrix;
pub use num_complex::Complex64;

use crate::hilbert::{hamming_unchecked, BitString, Boundary, ConstrainedBasis};
use crate::{Error, Result};

/// `H = Ω Σ_i P_{i-1} X_i P_{i+1}` as a dense matrix over a constrained basis.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: DMatrix<f64>,
    rabi: f64,
}

impl Hamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rabi(&self) -> f64 {
        self.rabi
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `ψ† H ψ`.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                let h = self.matrix[(i, j)];
                if h != 0.0 {
                    row += state.amplitudes[j] * h;
                }
            }
            acc += (state.amplitudes[i].conj() * row).re;
        }
        acc
    }
}

/// Build the PXP Hamiltonian. Two valid states are coupled iff they differ at
/// exactly one site; validity of both already implies that the flipped site
/// has both neighbours in the ground state.
pub fn build_pxp(basis: &ConstrainedBasis, rabi: f64) -> Hamiltonian {
    let d = basis.dim();
    let mut matrix = DMatrix::zeros(d, d);
    for (i, s) in basis.states().iter().enumerate() {
        for site in 0..basis.length() {
            let t = s.flipped(site);
            if let Some(j) = basis.index_of(&t) {
                debug_assert_eq!(hamming_unchecked(s, &t), 1);
                matrix[(i, j)] = rabi;
            }
        }
    }
    Hamiltonian { matrix, rabi }
}

/// Eigenpairs with energies ascending; column `i` of `vectors` is `φ_i`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `c_i = <φ_i|ψ>`.
    pub fn coefficients(&self, state: &StateVector) -> Vec<Complex64> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let col = self.vectors.column(i);
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += state.amplitudes[k] * col[k];
                }
                acc
            })
            .collect()
    }

    /// Largest `‖H φ_i − E_i φ_i‖` over all eigenpairs.
    pub fn max_residual(&self, h: &Hamiltonian) -> f64 {
        let hv = h.matrix() * &self.vectors;
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            let r = (hv.column(i) - self.vectors.column(i) * self.energies[i]).norm();
            worst = worst.max(r);
        }
        worst
    }

    /// Largest entry of `|VᵀV − I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Dense symmetric diagonalization.
pub fn diagonalize(h: &Hamiltonian) -> Result<EigenDecomposition> {
    let d = h.dim();
    let scale = h.matrix().amax().max(f64::MIN_POSITIVE);
    let eig = h
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 1000 * d.max(1))
        .ok_or(Error::NoConvergence { residual: f64::INFINITY })?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    let out = EigenDecomposition { energies, vectors };

    let residual = out.max_residual(h);
    if residual > 1e-10 * scale * (d as f64).max(1.0) {
        return Err(Error::NoConvergence { residual });
    }
    Ok(out)
}

/// Complex amplitudes over a constrained basis at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl StateVector {
    /// The product state `bits` at `t = 0`.
    pub fn basis_state(basis: &ConstrainedBasis, bits: &BitString) -> Result<Self> {
        let index = basis.require_index(bits)?;
        let mut amplitudes = alloc::vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, time: 0.0 })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes, time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>())
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
        self
    }

    /// Born probabilities `|ψ_k|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Uniform time grid of `steps` points on `(start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { start: 0.0, end: 10.0, steps: 20 }
    }
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        let span = self.end - self.start;
        (1..=self.steps).map(|k| self.start + span * k as f64 / self.steps as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || !(self.end > self.start) || !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "time grid ({}, {}] with {} steps",
                self.start,
                self.end,
                self.steps
            )));
        }
        Ok(())
    }
}

/// Snapshots of one quench.
#[derive(Debug, Clone)]
pub struct QuenchTrajectory {
    /// Product state the quench started from, when it was one.
    pub initial: Option<BitString>,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl QuenchTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// `ψ(t) = Σ_i c_i e^{−i E_i t} φ_i` at every requested time. `t = 0` returns
/// the initial amplitudes unchanged.
pub fn evolve(eig: &EigenDecomposition, initial: &StateVector, times: &[f64]) -> Result<QuenchTrajectory> {
    let d = eig.dim();
    if initial.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: initial.dim() });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    let coeffs = eig.coefficients(initial);
    let states = times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return StateVector { amplitudes: initial.amplitudes.clone(), time: 0.0 };
            }
            let phased: Vec<Complex64> =
                coeffs.iter().zip(&eig.energies).map(|(c, &e)| c * Complex64::cis(-e * t)).collect();
            let mut amplitudes = alloc::vec![Complex64::new(0.0, 0.0); d];
            for (i, p) in phased.iter().enumerate() {
                let col = eig.vectors.column(i);
                for (a, &v) in amplitudes.iter_mut().zip(col.iter()) {
                    *a += p * v;
                }
            }
            StateVector { amplitudes, time: t }
        })
        .collect();
    Ok(QuenchTrajectory { initial: None, times: times.to_vec(), states })
}

/// Quench from the product state `initial`.
pub fn quench(
    basis: &ConstrainedBasis,
    eig: &EigenDecomposition,
    initial: BitString,
    times: &[f64],
) -> Result<QuenchTrajectory> {
    let psi0 = StateVector::basis_state(basis, &initial)?;
    let mut traj = evolve(eig, &psi0, times)?;
    traj.initial = Some(initial);
    Ok(traj)
}

/// Fraction of neighbouring site pairs in the same state. Under open
/// boundaries a ground-state site at either edge also counts as a domain
/// wall, and the normalization is over the `L + 1` padded pairs.
pub fn domain_wall_density(bits: &BitString, boundary: Boundary) -> f64 {
    let n = bits.len();
    match boundary {
        Boundary::Periodic => {
            let same = (0..n).filter(|&i| bits.get(i) == bits.get((i + 1) % n)).count();
            same as f64 / n as f64
        }
        Boundary::Open => {
            let inner = (0..n - 1).filter(|&i| bits.get(i) == bits.get(i + 1)).count();
            let edges = usize::from(!bits.get(0)) + usize::from(!bits.get(n - 1));
            (inner + edges) as f64 / (n + 1) as f64
        }
    }
}

/// Born-weighted domain-wall density of a state.
pub fn state_domain_wall_density(basis: &ConstrainedBasis, state: &StateVector) -> f64 {
    basis
        .states()
        .iter()
        .zip(&state.amplitudes)
        .map(|(s, a)| a.norm_sqr() * domain_wall_density(s, basis.boundary()))
        .sum()
}

/// `|<a|b>|²`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(a.inner(b).norm_sqr())
}

/// `(E_i, |c_i|²)` for every eigenstate.
pub fn expansion_spectrum(eig: &EigenDecomposition, initial: &StateVector) -> Vec<(f64, f64)> {
    eig.energies.iter().zip(eig.coefficients(initial)).map(|(&e, c)| (e, c.norm_sqr())).collect()
}

/// `1 / Σ w_i²` of a weight list (e.g. from [`expansion_spectrum`]).
pub fn participation_ratio(weights: impl IntoIterator<Item = f64>) -> f64 {
    let s: f64 = weights.into_iter().map(|w| w * w).sum();
    1.0 / s
}

/// Local maxima of a sampled series `(t, f)` whose value exceeds `threshold`.
/// A point is a maximum if it is above its predecessor and not below its
/// successor; the endpoints never qualify.
pub fn revival_peaks(series: &[(f64, f64)], threshold: f64) -> Vec<(f64, f64)> {
    series.windows(3).filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1 && w[1].1 > threshold).map(|w| w[1]).collect()
}
