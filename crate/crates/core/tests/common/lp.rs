//! Dense LP oracle shared by the integration tests.

const EPS: f64 = 1e-10;

/// Dense two-phase tableau simplex with Bland's rule for
/// `min cᵀx  s.t.  A x = b, x ≥ 0` with `b ≥ 0`.
pub fn simplex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let (m, n) = (a.len(), c.len());
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend((0..m).map(|k| f64::from(u8::from(k == i))));
            row.push(b[i]);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, col: usize| {
        let p = t[r][col];
        for v in &mut t[r] {
            *v /= p;
        }
        let pr = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[col].abs() > 0.0 {
                let f = row[col];
                for (v, q) in row.iter_mut().zip(&pr) {
                    *v -= f * q;
                }
            }
        }
        basis[r] = col;
    };

    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| loop {
        let reduced = |j: usize, t: &Vec<Vec<f64>>, basis: &Vec<usize>| {
            cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>()
        };
        let Some(col) = (0..allowed).find(|&j| !basis.contains(&j) && reduced(j, t, basis) < -EPS) else {
            return;
        };
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            if t[i][col] > EPS {
                let ratio = t[i][width - 1] / t[i][col];
                match best {
                    Some((r, bi)) if ratio > r + EPS || (ratio > r - EPS && basis[i] > basis[bi]) => {}
                    _ => best = Some((ratio, i)),
                }
            }
        }
        let (_, r) = best.expect("unbounded");
        pivot(t, basis, r, col);
    };

    let phase1: Vec<f64> = (0..n + m).map(|j| f64::from(u8::from(j >= n))).collect();
    run(&mut t, &mut basis, &phase1, n + m);
    let infeasibility: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][width - 1]).sum();
    assert!(infeasibility < 1e-9, "oracle LP infeasible: {infeasibility}");
    for r in 0..m {
        if basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| t[r][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, r, col);
            }
        }
    }
    let mut phase2 = c.to_vec();
    phase2.extend(core::iter::repeat_n(0.0, m));
    run(&mut t, &mut basis, &phase2, n);
    (0..m).filter(|&i| basis[i] < n).map(|i| c[basis[i]] * t[i][width - 1]).sum()
}

/// Optimal transport over the full coupling of `a` and `b`.
pub fn coupling_lp(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (i, &s) in supply.iter().enumerate() {
        rows.push((0..m * n).map(|k| f64::from(u8::from(k / n == i))).collect());
        rhs.push(s);
    }
    // the last column constraint is implied by the others
    for (j, &d) in demand.iter().enumerate().take(n - 1) {
        rows.push((0..m * n).map(|k| f64::from(u8::from(k % n == j))).collect());
        rhs.push(d);
    }
    simplex(&rows, &rhs, cost)
}
