//! Distances between quantum states.
//!
//! The probabilistic earth mover's (PEM) distance is the optimal-transport
//! cost between the Born distributions of two states, with the Hamming
//! distance between bitstrings as ground metric. The Hilbert-Schmidt distance
//! between pure-state projectors is the baseline it is compared against.

pub mod transport;

use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{QuenchTrajectory, StateVector};
use crate::hilbert::{hamming_unchecked, BitString, ConstrainedBasis};
use crate::{Error, Result};

/// Probabilities below this are dropped before transport.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

const NORMALIZATION_TOL: f64 = 1e-9;

/// Probability weights on distinct bitstrings.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<BitString>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<BitString>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), got: weights.len() });
        }
        if support.is_empty() {
            return Err(Error::InvalidArgument("empty support".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized { total });
        }
        let len = support[0].len();
        if let Some(s) = support.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch { left: len, right: s.len() });
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("support entries must be distinct".into()));
        }
        Ok(Self { support, weights })
    }

    pub fn point(bits: BitString) -> Self {
        Self { support: alloc::vec![bits], weights: alloc::vec![1.0] }
    }

    /// Born distribution of `state`, dropping outcomes below `truncation` and
    /// renormalizing.
    pub fn from_state(basis: &ConstrainedBasis, state: &StateVector, truncation: f64) -> Result<Self> {
        if state.dim() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: state.dim() });
        }
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for (s, a) in basis.states().iter().zip(&state.amplitudes) {
            let p = a.norm_sqr();
            if p >= truncation {
                support.push(*s);
                weights.push(p);
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Unnormalized { total });
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { support, weights })
    }

    pub fn support(&self) -> &[BitString] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn string_length(&self) -> usize {
        self.support[0].len()
    }
}

/// Earth mover's distance between two distributions under the Hamming metric.
///
/// The cost is a metric, so the optimum depends only on `a − b`: mass the two
/// distributions share on a string stays in place and only the positive and
/// negative parts of the difference are transported.
pub fn pem_distance(a: &DiscreteDistribution, b: &DiscreteDistribution) -> Result<f64> {
    Ok(pem_transport(a, b)?.map_or(0.0, |s| s.cost))
}

/// The transport problem behind [`pem_distance`], `None` when `a == b`.
pub fn pem_transport(
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
) -> Result<Option<transport::TransportSolution>> {
    for d in [a, b] {
        let total: f64 = d.weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized { total });
        }
    }
    if a.string_length() != b.string_length() {
        return Err(Error::LengthMismatch { left: a.string_length(), right: b.string_length() });
    }

    // Net mass per string, merged over the sorted union of supports.
    let mut ea: Vec<(BitString, f64)> = a.support.iter().copied().zip(a.weights.iter().copied()).collect();
    let mut eb: Vec<(BitString, f64)> = b.support.iter().copied().zip(b.weights.iter().copied()).collect();
    ea.sort_unstable_by_key(|e| e.0);
    eb.sort_unstable_by_key(|e| e.0);
    let (mut sources, mut sinks) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < ea.len() || j < eb.len() {
        let (s, diff) = match (ea.get(i), eb.get(j)) {
            (Some(x), Some(y)) if x.0 == y.0 => {
                i += 1;
                j += 1;
                (x.0, x.1 - y.1)
            }
            (Some(x), Some(y)) if x.0 < y.0 => {
                i += 1;
                (x.0, x.1)
            }
            (Some(x), None) => {
                i += 1;
                (x.0, x.1)
            }
            (_, Some(y)) => {
                j += 1;
                (y.0, -y.1)
            }
            (None, None) => unreachable!(),
        };
        if diff > 0.0 {
            sources.push((s, diff));
        } else if diff < 0.0 {
            sinks.push((s, -diff));
        }
    }
    if sources.is_empty() || sinks.is_empty() {
        return Ok(None);
    }

    let supply: Vec<f64> = sources.iter().map(|s| s.1).collect();
    let demand: Vec<f64> = sinks.iter().map(|s| s.1).collect();
    let mut cost = Vec::with_capacity(supply.len() * demand.len());
    for (u, _) in &sources {
        for (v, _) in &sinks {
            cost.push(hamming_unchecked(u, v));
        }
    }
    transport::solve(&supply, &demand, &cost).map(Some)
}

/// `‖ |a><a| − |b><b| ‖_HS = sqrt(2 (1 − |<a|b>|²))`.
pub fn hs_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let overlap = a.inner(b).norm_sqr().min(1.0);
    Ok(libm::sqrt(2.0 * (1.0 - overlap)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Pem,
    #[serde(rename = "hs")]
    HilbertSchmidt,
}

/// A state prepared for repeated distance evaluations.
#[derive(Debug, Clone)]
pub enum Snapshot {
    Distribution(DiscreteDistribution),
    State(StateVector),
}

impl Snapshot {
    pub fn prepare(basis: &ConstrainedBasis, state: &StateVector, kind: DistanceKind) -> Result<Self> {
        Ok(match kind {
            DistanceKind::Pem => {
                Snapshot::Distribution(DiscreteDistribution::from_state(basis, state, DEFAULT_TRUNCATION)?)
            }
            DistanceKind::HilbertSchmidt => Snapshot::State(state.clone()),
        })
    }

    pub fn distance(&self, other: &Snapshot) -> Result<f64> {
        match (self, other) {
            (Snapshot::Distribution(a), Snapshot::Distribution(b)) => pem_distance(a, b),
            (Snapshot::State(a), Snapshot::State(b)) => hs_distance(a, b),
            _ => Err(Error::InvalidArgument("snapshots prepared for different metrics".into())),
        }
    }
}

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Fill the upper triangle from `f(i, j)` (`i < j`) and mirror it.
    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let n = labels.len();
        let mut values = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j)?;
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Ok(Self { labels, values })
    }

    /// Matrix from a full row-major array; checks shape, symmetry and the diagonal.
    pub fn from_values(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: values.len() });
        }
        for i in 0..n {
            if values[i * n + i].abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidArgument(alloc::format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (x, y) = (values[i * n + j], values[j * n + i]);
                if !(x >= 0.0) || (x - y).abs() > NORMALIZATION_TOL {
                    return Err(Error::InvalidArgument(alloc::format!("entry ({i}, {j}) is negative or asymmetric")));
                }
            }
        }
        Ok(Self { labels, values })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean of the off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / (n * (n - 1)) as f64
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let mut values = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Self { labels, values }
    }
}

pub fn time_label(t: f64) -> String {
    alloc::format!("t={t}")
}

/// Pairwise distances between all snapshots of a trajectory.
pub fn trajectory_distance_matrix(
    basis: &ConstrainedBasis,
    traj: &QuenchTrajectory,
    kind: DistanceKind,
) -> Result<DistanceMatrix> {
    if traj.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: traj.len() });
    }
    let snaps = snapshots(basis, traj, kind)?;
    let labels = traj.times.iter().map(|&t| time_label(t)).collect();
    DistanceMatrix::from_fn(labels, |i, j| snaps[i].distance(&snaps[j]))
}

pub fn snapshots(basis: &ConstrainedBasis, traj: &QuenchTrajectory, kind: DistanceKind) -> Result<Vec<Snapshot>> {
    traj.states.iter().map(|s| Snapshot::prepare(basis, s, kind)).collect()
}

/// Label of snapshot `t` in a joint matrix: `"<initial>@t=<t>"`.
pub fn joint_label(traj: &QuenchTrajectory, t: f64) -> String {
    match traj.initial {
        Some(b) => alloc::format!("{b}@{}", time_label(t)),
        None => alloc::format!("?@{}", time_label(t)),
    }
}

/// One matrix over the snapshots of every trajectory, in trajectory order.
pub fn joint_distance_matrix(
    basis: &ConstrainedBasis,
    trajs: &[QuenchTrajectory],
    kind: DistanceKind,
) -> Result<DistanceMatrix> {
    let mut snaps = Vec::new();
    let mut labels = Vec::new();
    for traj in trajs {
        snaps.extend(snapshots(basis, traj, kind)?);
        labels.extend(traj.times.iter().map(|&t| joint_label(traj, t)));
    }
    if snaps.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: snaps.len() });
    }
    DistanceMatrix::from_fn(labels, |i, j| snaps[i].distance(&snaps[j]))
}

/// `(t_n, d(ψ(0), ψ(t_n)))` for every snapshot; `ψ(0)` is the product state
/// the trajectory started from.
pub fn distance_to_initial_series(
    basis: &ConstrainedBasis,
    traj: &QuenchTrajectory,
    kind: DistanceKind,
) -> Result<Vec<(f64, f64)>> {
    let initial =
        traj.initial.ok_or_else(|| Error::InvalidArgument("trajectory has no product initial state".into()))?;
    let psi0 = Snapshot::prepare(basis, &StateVector::basis_state(basis, &initial)?, kind)?;
    traj.states
        .iter()
        .zip(&traj.times)
        .map(|(s, &t)| Ok((t, psi0.distance(&Snapshot::prepare(basis, s, kind)?)?)))
        .collect()
}
