//! Projective measurements in the computational basis and readout errors.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{QuenchTrajectory, StateVector};
use crate::hilbert::{BitString, ConstrainedBasis};
use crate::{Error, Result};

/// Independent per-site readout flips with separate `0 → 1` and `1 → 0` rates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ReadoutChannel {
    pub ground_to_excited: f64,
    pub excited_to_ground: f64,
}

impl ReadoutChannel {
    pub fn symmetric(rate: f64) -> Result<Self> {
        Self::asymmetric(rate, rate)
    }

    pub fn asymmetric(ground_to_excited: f64, excited_to_ground: f64) -> Result<Self> {
        for r in [ground_to_excited, excited_to_ground] {
            if !(0.0..0.5).contains(&r) {
                return Err(Error::ErrorRateOutOfRange(r));
            }
        }
        Ok(Self { ground_to_excited, excited_to_ground })
    }

    pub fn noiseless() -> Self {
        Self { ground_to_excited: 0.0, excited_to_ground: 0.0 }
    }

    pub fn is_noiseless(&self) -> bool {
        self.ground_to_excited == 0.0 && self.excited_to_ground == 0.0
    }

    pub fn apply<R: RngCore + ?Sized>(&self, bits: &BitString, rng: &mut R) -> BitString {
        if self.is_noiseless() {
            return *bits;
        }
        let mut out = *bits;
        for site in 0..bits.len() {
            let p = if bits.get(site) { self.excited_to_ground } else { self.ground_to_excited };
            if rng.gen::<f64>() < p {
                out = out.flipped(site);
            }
        }
        out
    }
}

/// Flip each site independently with probability `rate`.
pub fn apply_readout_error<R: RngCore + ?Sized>(bits: &BitString, rate: f64, rng: &mut R) -> Result<BitString> {
    Ok(ReadoutChannel::symmetric(rate)?.apply(bits, rng))
}

/// Inverse-CDF sampler over the Born distribution of one state.
#[derive(Debug, Clone)]
pub struct BornSampler {
    cumulative: Vec<f64>,
}

impl BornSampler {
    pub fn new(state: &StateVector) -> Self {
        let mut acc = 0.0;
        let cumulative = state
            .amplitudes
            .iter()
            .map(|a| {
                acc += a.norm_sqr();
                acc
            })
            .collect();
        Self { cumulative }
    }

    /// Index of one draw.
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let u = rng.gen::<f64>() * total;
        // first index whose cumulative weight exceeds u
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1)
    }
}

/// `shots` i.i.d. draws from `|ψ_k|²`.
pub fn sample_bitstrings<R: RngCore + ?Sized>(
    basis: &ConstrainedBasis,
    state: &StateVector,
    shots: usize,
    rng: &mut R,
) -> Result<Vec<BitString>> {
    if state.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: state.dim() });
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let sampler = BornSampler::new(state);
    Ok((0..shots).map(|_| basis.state(sampler.draw(rng))).collect())
}

/// RNG for one `(initial state, timestep)` cell. Streams are independent, so
/// the order in which cells are generated never changes their contents.
pub fn stream_rng(seed: u64, initial_index: u64, time_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((initial_index << 32) ^ time_index);
    rng
}

/// Measured shots of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub initial: BitString,
    pub times: Vec<f64>,
    pub shots_per_time: usize,
    /// `records[k]` holds the shots taken at `times[k]`.
    pub records: Vec<Vec<BitString>>,
    pub channel: ReadoutChannel,
    pub seed: u64,
}

impl SampleSet {
    /// Every shot from every timestep in one list.
    pub fn pooled(&self) -> Vec<BitString> {
        self.records.iter().flatten().copied().collect()
    }

    pub fn total_shots(&self) -> usize {
        self.records.iter().map(Vec::len).sum()
    }
}

/// Sample `shots` bitstrings at every snapshot of `traj` and pass each
/// through `channel`. `initial_index` selects the RNG stream family.
pub fn sample_trajectory(
    basis: &ConstrainedBasis,
    traj: &QuenchTrajectory,
    shots: usize,
    channel: ReadoutChannel,
    seed: u64,
    initial_index: u64,
) -> Result<SampleSet> {
    let initial =
        traj.initial.ok_or_else(|| Error::InvalidArgument("trajectory has no product initial state".into()))?;
    let records = traj
        .states
        .iter()
        .enumerate()
        .map(|(k, state)| {
            let mut rng = stream_rng(seed, initial_index, k as u64);
            let clean = sample_bitstrings(basis, state, shots, &mut rng)?;
            Ok(clean.iter().map(|b| channel.apply(b, &mut rng)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet { initial, times: traj.times.clone(), shots_per_time: shots, records, channel, seed })
}
