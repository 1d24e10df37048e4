//! Dense linear algebra helpers over `nalgebra` matrices.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Table = DMatrix<f64>;

pub fn inverse(m: &Table) -> Result<Table> {
    m.clone().lu().try_inverse().ok_or(Error::SingularSystem)
}

/// Principal submatrix keeping the listed indices, in order.
pub fn submatrix(m: &Table, keep: &[usize]) -> Table {
    Table::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])])
}

/// Eigenvalues (ascending) and matching eigenvectors (as columns) of a
/// symmetric matrix.
pub fn symmetric_eigen(m: &Table) -> (Vec<f64>, Table) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Table::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Table::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &Table) -> f64 {
    symmetric_eigen(m).0.first().copied().unwrap_or(0.0)
}

pub fn max_abs_diff(a: &Table, b: &Table) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Solves `m · Q = 0` with `Σ m = 1` by replacing one balance equation with
/// the normalization.
pub fn stationary_distribution(q: &Table) -> Result<DVector<f64>> {
    let n = q.nrows();
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    a.lu().solve(&rhs).ok_or(Error::SingularSystem)
}
