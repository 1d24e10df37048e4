//! Dense Gauss-Jordan oracle sharing no code with the crate's linear algebra.
//! Also included by the acceptance harness of the companion crate.

#![allow(dead_code, clippy::needless_range_loop)]

use loctime_core::model::MarkovModel;

pub type Dense = Vec<Vec<f64>>;

pub fn gauss_jordan_inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut m: Dense = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-300, "singular");
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn generator(model: &MarkovModel) -> Dense {
    let n = model.len();
    (0..n).map(|i| (0..n).map(|j| model.generator()[(i, j)]).collect()).collect()
}

/// Invariant measure by solving `mQ = 0`, `Σm = 1` with the oracle.
pub fn oracle_invariant(q: &Dense) -> Vec<f64> {
    let n = q.len();
    let mut a: Dense = (0..n).map(|i| (0..n).map(|j| q[j][i]).collect()).collect();
    a[n - 1] = vec![1.0; n];
    let inv = gauss_jordan_inverse(&a);
    (0..n).map(|i| inv[i][n - 1]).collect()
}

pub fn oracle_resolvent(model: &MarkovModel, alpha: f64) -> Dense {
    let q = generator(model);
    let m = oracle_invariant(&q);
    let n = q.len();
    let a: Dense = (0..n).map(|i| (0..n).map(|j| if i == j { alpha } else { 0.0 } - q[i][j]).collect()).collect();
    let inv = gauss_jordan_inverse(&a);
    (0..n).map(|i| (0..n).map(|j| inv[i][j] / m[j]).collect()).collect()
}

pub fn oracle_killed(model: &MarkovModel, base: usize) -> Dense {
    let q = generator(model);
    let m = oracle_invariant(&q);
    let n = q.len();
    let keep: Vec<usize> = (0..n).filter(|&i| i != base).collect();
    let a: Dense = keep.iter().map(|&i| keep.iter().map(|&j| -q[i][j]).collect()).collect();
    let inv = gauss_jordan_inverse(&a);
    let mut out = vec![vec![0.0; n]; n];
    for (r, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            out[i][j] = inv[r][c] / m[j];
        }
    }
    out
}
