//! Metric multidimensional scaling.
//!
//! Embeddings minimize the raw stress `Σ_{i<j} (‖x_i − x_j‖ − d_ij)²`
//! by SMACOF (Guttman transform) iterations, started from classical
//! (Torgerson) scaling.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metric::DistanceMatrix;
use crate::{Error, Result};

/// Pairs closer than this contribute nothing to the Guttman update.
pub const DISTANCE_FLOOR: f64 = 1e-12;

/// Points of an embedding, one row per snapshot.
pub type Coords = DMatrix<f64>;

#[derive(Debug, Clone)]
pub struct Embedding {
    pub coords: Coords,
    pub stress: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stress before the first update and after every iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SmacofOptions {
    pub max_iter: usize,
    /// Stop once the relative stress decrease of one iteration falls below this.
    pub tol: f64,
}

impl Default for SmacofOptions {
    fn default() -> Self {
        Self { max_iter: 500, tol: 1e-9 }
    }
}

fn row_distance(x: &Coords, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for c in 0..x.ncols() {
        let d = x[(i, c)] - x[(j, c)];
        s += d * d;
    }
    libm::sqrt(s)
}

/// Raw stress of `coords` against `target`.
pub fn stress(target: &DistanceMatrix, coords: &Coords) -> f64 {
    let n = target.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = row_distance(coords, i, j) - target.get(i, j);
            s += r * r;
        }
    }
    s
}

/// Torgerson initialization.
#[derive(Debug, Clone)]
pub struct ClassicalInit {
    pub coords: Coords,
    /// Set when fewer than `dim` positive eigenvalues exist; the missing
    /// axes are zero.
    pub padded: bool,
    pub eigenvalues: Vec<f64>,
}

/// Top-`dim` spectral coordinates of the double-centred squared distances.
pub fn classical_init(target: &DistanceMatrix, dim: usize) -> Result<ClassicalInit> {
    let n = target.len();
    if dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
    }
    if n == 0 {
        return Ok(ClassicalInit { coords: Coords::zeros(0, dim), padded: true, eigenvalues: Vec::new() });
    }
    let sq = DMatrix::from_fn(n, n, |i, j| {
        let d = target.get(i, j);
        d * d
    });
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let total_mean = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + total_mean));

    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut coords = Coords::zeros(n, dim);
    let mut padded = false;
    let mut eigenvalues = Vec::with_capacity(dim);
    for axis in 0..dim {
        let Some(&k) = order.get(axis) else {
            padded = true;
            eigenvalues.push(0.0);
            continue;
        };
        let lambda = eig.eigenvalues[k];
        eigenvalues.push(lambda);
        if lambda <= 1e-12 * scale {
            padded = true;
            continue;
        }
        let v = eig.eigenvectors.column(k);
        // sign convention: the largest-magnitude component is positive
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let s = libm::sqrt(lambda) * sign;
        for i in 0..n {
            coords[(i, axis)] = v[i] * s;
        }
    }
    Ok(ClassicalInit { coords, padded, eigenvalues })
}

/// One Guttman transform `X ← B(X) X / n`.
fn guttman(target: &DistanceMatrix, x: &Coords) -> Coords {
    let n = x.nrows();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let dist = row_distance(x, i, j);
            if dist > DISTANCE_FLOOR {
                let v = -target.get(i, j) / dist;
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| b[(i, j)]).sum();
        b[(i, i)] = -s;
    }
    (b * x) / n as f64
}

/// SMACOF refinement from `init`.
pub fn smacof(target: &DistanceMatrix, init: &Coords, options: SmacofOptions) -> Result<Embedding> {
    if init.nrows() != target.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), got: init.nrows() });
    }
    let mut x = init.clone();
    let mut current = stress(target, &x);
    let mut history = alloc::vec![current];
    let mut iterations = 0;
    let mut converged = current == 0.0;
    while !converged && iterations < options.max_iter {
        let next = guttman(target, &x);
        let s = stress(target, &next);
        iterations += 1;
        // majorization never increases stress; rounding can, so keep the old point
        if s > current {
            converged = true;
            break;
        }
        let decrease = current - s;
        x = next;
        history.push(s);
        converged = s == 0.0 || decrease <= options.tol * current;
        current = s;
    }
    Ok(Embedding { coords: x, stress: current, iterations, converged, history })
}

/// Classical initialization followed by SMACOF.
pub fn embed(target: &DistanceMatrix, dim: usize, options: SmacofOptions) -> Result<Embedding> {
    let init = classical_init(target, dim)?;
    smacof(target, &init.coords, options)
}

/// Best of the classical start and `restarts` seeded random starts.
pub fn embed_with_restarts(
    target: &DistanceMatrix,
    dim: usize,
    options: SmacofOptions,
    restarts: usize,
    seed: u64,
) -> Result<Embedding> {
    let mut best = embed(target, dim, options)?;
    let n = target.len();
    let scale = target.values().iter().copied().fold(0.0, f64::max).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let init = Coords::from_fn(n, dim, |_, _| (rng.gen::<f64>() - 0.5) * scale);
        let e = smacof(target, &init, options)?;
        if e.stress < best.stress {
            best = e;
        }
    }
    Ok(best)
}

/// Root-mean-square distance of the points from their centroid.
pub fn embedding_spread(coords: &Coords) -> f64 {
    let n = coords.nrows();
    if n == 0 {
        return 0.0;
    }
    let centroid = coords.row_mean();
    let mut s = 0.0;
    for i in 0..n {
        s += (coords.row(i) - &centroid).norm_squared();
    }
    libm::sqrt(s / n as f64)
}

/// Rigid motion (rotation or reflection plus translation) of `b` that best
/// matches `a` in the least-squares sense. Returns the moved copy of `b`.
pub fn procrustes_align(a: &Coords, b: &Coords) -> Result<Coords> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(b.clone());
    }
    let ma = a.row_mean();
    let mb = b.row_mean();
    let mut ac = a.clone();
    let mut bc = b.clone();
    for i in 0..n {
        let mut r = ac.row_mut(i);
        r -= &ma;
        let mut r = bc.row_mut(i);
        r -= &mb;
    }
    let m = bc.transpose() * &ac;
    let svd = m.svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        return Err(Error::NoConvergence { residual: f64::NAN });
    };
    let rotation = u * vt;
    let mut out = bc * rotation;
    for i in 0..n {
        let mut r = out.row_mut(i);
        r += &ma;
    }
    Ok(out)
}

/// Root-mean-square distance between corresponding rows.
pub fn rms_residual(a: &Coords, b: &Coords) -> f64 {
    let n = a.nrows().max(1);
    libm::sqrt((a - b).norm_squared() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use approx::assert_abs_diff_eq;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| alloc::format!("{i}")).collect()
    }

    fn from_points(points: &Coords) -> DistanceMatrix {
        DistanceMatrix::from_fn(labels(points.nrows()), |i, j| Ok(row_distance(points, i, j))).unwrap()
    }

    #[test]
    fn collinear_points_recovered() {
        let d = DistanceMatrix::from_values(labels(3), alloc::vec![0., 1., 2., 1., 0., 1., 2., 1., 0.]).unwrap();
        let init = classical_init(&d, 1).unwrap();
        let x: Vec<f64> = init.coords.column(0).iter().copied().collect();
        let flip = if x[0] > x[2] { -1.0 } else { 1.0 };
        for (got, want) in x.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(got * flip, want, epsilon = 1e-12);
        }
        assert!(!init.padded);
        // the second axis has no spectral weight
        assert!(classical_init(&d, 2).unwrap().padded);
    }

    #[test]
    fn zero_matrix_collapses_to_origin() {
        let d = DistanceMatrix::from_values(labels(4), alloc::vec![0.0; 16]).unwrap();
        let e = embed(&d, 2, SmacofOptions::default()).unwrap();
        assert!(e.coords.iter().all(|v| *v == 0.0));
        assert_eq!(e.stress, 0.0);
    }

    #[test]
    fn spread_examples() {
        assert_eq!(embedding_spread(&Coords::from_row_slice(3, 2, &[1., 1., 1., 1., 1., 1.])), 0.0);
        assert_abs_diff_eq!(embedding_spread(&Coords::from_row_slice(2, 1, &[0., 2.])), 1.0);
        let square = Coords::from_row_slice(4, 2, &[0., 0., 1., 0., 0., 1., 1., 1.]);
        assert_abs_diff_eq!(embedding_spread(&square), 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn procrustes_undoes_rotation() {
        let a = Coords::from_row_slice(4, 2, &[0., 0., 2., 0., 0., 1., 3., 3.]);
        let rot = Coords::from_row_slice(2, 2, &[0., -1., 1., 0.]);
        let b = &a * rot;
        let aligned = procrustes_align(&a, &b).unwrap();
        assert!(rms_residual(&a, &aligned) < 1e-9);
        let same = procrustes_align(&a, &a).unwrap();
        assert!(rms_residual(&a, &same) < 1e-12);
        assert!(procrustes_align(&a, &Coords::zeros(3, 2)).is_err());
    }

    #[test]
    fn realizable_configuration_has_zero_stress() {
        let p = Coords::from_row_slice(5, 2, &[0., 0., 1., 0., 0., 2., -1., 1., 3., 2.]);
        let d = from_points(&p);
        let e = embed(&d, 2, SmacofOptions::default()).unwrap();
        assert!(e.stress < 1e-8);
        assert_abs_diff_eq!(e.stress, stress(&d, &e.coords), epsilon = 1e-12);
    }

    #[test]
    fn coincident_points_are_handled() {
        let p = Coords::from_row_slice(4, 2, &[0., 0., 0., 0., 1., 0., 0., 1.]);
        let d = from_points(&p);
        let init = Coords::from_row_slice(4, 2, &[0., 0., 0., 0., 0.5, 0.5, -0.2, 1.0]);
        let e = smacof(&d, &init, SmacofOptions::default()).unwrap();
        assert!(e.stress.is_finite());
        assert!(e.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn restarts_never_worse() {
        let d = DistanceMatrix::from_values(
            labels(4),
            alloc::vec![0., 1., 1., 1., 1., 0., 1., 1., 1., 1., 0., 1., 1., 1., 1., 0.],
        )
        .unwrap();
        let base = embed(&d, 2, SmacofOptions::default()).unwrap();
        let best = embed_with_restarts(&d, 2, SmacofOptions::default(), 5, 1).unwrap();
        assert!(best.stress <= base.stress);
    }
}
