//! Rayon drivers. Work is split per quench or per matrix entry; every random
//! draw is keyed by (seed, state, timestep), so results do not depend on the
//! number of workers.

use rayon::prelude::*;

use scarid_core::detect::{PipelineContext, StateOutcome};
use scarid_core::dynamics::QuenchTrajectory;
use scarid_core::hilbert::ConstrainedBasis;
use scarid_core::metric::{joint_label, snapshots, time_label, DistanceKind, DistanceMatrix, Snapshot};
use scarid_core::Result;

/// Analyze every quench of a sweep; outcomes come back in sweep order.
pub fn sweep(ctx: &PipelineContext) -> Vec<StateOutcome> {
    (0..ctx.len()).into_par_iter().map(|i| ctx.analyze(i)).collect()
}

/// Pairwise matrix with the upper triangle split across workers.
pub fn distance_matrix(labels: Vec<String>, snaps: &[Snapshot]) -> Result<DistanceMatrix> {
    let n = snaps.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let upper = pairs.par_iter().map(|&(i, j)| snaps[i].distance(&snaps[j])).collect::<Result<Vec<f64>>>()?;
    let mut values = vec![0.0; n * n];
    for (&(i, j), d) in pairs.iter().zip(upper) {
        values[i * n + j] = d;
        values[j * n + i] = d;
    }
    DistanceMatrix::from_values(labels, values)
}

pub fn trajectory_matrix(
    basis: &ConstrainedBasis,
    traj: &QuenchTrajectory,
    kind: DistanceKind,
) -> Result<DistanceMatrix> {
    let labels = traj.times.iter().map(|&t| time_label(t)).collect();
    distance_matrix(labels, &snapshots(basis, traj, kind)?)
}

pub fn joint_matrix(
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
    distance_matrix(labels, &snaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use scarid_core::dynamics::{build_pxp, diagonalize, quench};
    use scarid_core::hilbert::{enumerate_basis, BitString, Boundary};
    use scarid_core::metric::{joint_distance_matrix, trajectory_distance_matrix};

    #[test]
    fn parallel_matrices_match_sequential() {
        let basis = enumerate_basis(6, Boundary::Periodic).unwrap();
        let eig = diagonalize(&build_pxp(&basis, 1.0)).unwrap();
        let times = [0.4, 0.8, 1.2, 1.6];
        let a = quench(&basis, &eig, BitString::z2(6), &times).unwrap();
        let b = quench(&basis, &eig, BitString::ground(6), &times).unwrap();
        for kind in [DistanceKind::Pem, DistanceKind::HilbertSchmidt] {
            assert_eq!(
                trajectory_matrix(&basis, &a, kind).unwrap(),
                trajectory_distance_matrix(&basis, &a, kind).unwrap()
            );
            let trajs = [a.clone(), b.clone()];
            assert_eq!(
                joint_matrix(&basis, &trajs, kind).unwrap(),
                joint_distance_matrix(&basis, &trajs, kind).unwrap()
            );
        }
    }
}
