//! Potential and killed densities, with the intrinsic metric and Gaussian
//! covariance kernel built from them by exact dense solves.
//!
//! Every density is taken with respect to the invariant measure `m`, so
//! `u^α(x,y) m(y) = ((αI − Q)^{-1})(x,y)` and the local time at `y` is the
//! occupation time of `y` divided by `m(y)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Table};
use crate::model::MarkovModel;

/// Tolerance below which a negative squared distance is treated as rounding.
pub const NEGATIVE_SQUARE_TOL: f64 = 1e-9;
/// Eigenvalue floor accepted for the covariance kernel.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialDensityTable {
    pub alpha: f64,
    pub table: Table,
}

impl PotentialDensityTable {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.table[(x, y)]
    }
}

/// Potential densities of the chain killed on hitting `base`; the `base`
/// row and column are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct KilledPotentialTable {
    pub base: usize,
    pub table: Table,
}

impl KilledPotentialTable {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.table[(x, y)]
    }

    pub fn len(&self) -> usize {
        self.table.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.table.nrows() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicMetric {
    /// `d(x,y)`, units time^{1/2}.
    pub d: Table,
    /// `h(x,y) = E_x(L^x_{T_y})`, zero on the diagonal.
    pub h: Table,
}

impl IntrinsicMetric {
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.d[(x, y)]
    }

    pub fn len(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.d.nrows() == 0
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceKernel {
    pub base: usize,
    pub gamma: Table,
}

impl CovarianceKernel {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.gamma[(x, y)]
    }

    pub fn len(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.nrows() == 0
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::Config { field: "alpha".into(), message: alloc::format!("must be finite and > 0, got {alpha}") })
    }
}

/// `u^α(x,y) = ((αI − Q)^{-1})(x,y) / m(y)`.
pub fn resolvent_densities(model: &MarkovModel, alpha: f64) -> Result<PotentialDensityTable> {
    check_alpha(alpha)?;
    let n = model.len();
    let a = Table::identity(n, n) * alpha - model.generator();
    let inv = linalg::inverse(&a)?;
    let m = model.invariant();
    let table = Table::from_fn(n, n, |x, y| inv[(x, y)] / m[y]);
    Ok(PotentialDensityTable { alpha, table })
}

fn killed_with_rate(model: &MarkovModel, base: usize, alpha: f64) -> Result<Table> {
    model.check_state(base)?;
    let n = model.len();
    let keep: Vec<usize> = (0..n).filter(|&x| x != base).collect();
    let mut sub = -linalg::submatrix(model.generator(), &keep);
    for i in 0..keep.len() {
        sub[(i, i)] += alpha;
    }
    let inv = linalg::inverse(&sub)?;
    let m = model.invariant();
    let mut table = Table::zeros(n, n);
    for (i, &x) in keep.iter().enumerate() {
        for (j, &y) in keep.iter().enumerate() {
            table[(x, y)] = inv[(i, j)] / m[y];
        }
    }
    Ok(table)
}

/// `u_{T_base}(x,y)`: densities of the chain killed at its first hit of
/// `base`.
pub fn killed_densities(model: &MarkovModel, base: usize) -> Result<KilledPotentialTable> {
    let table = killed_with_rate(model, base, 0.0)?;
    Ok(KilledPotentialTable { base, table })
}

/// α-potential densities of the chain killed at `T_base`; these increase to
/// [`killed_densities`] as `α → 0`.
pub fn killed_resolvent_densities(model: &MarkovModel, base: usize, alpha: f64) -> Result<KilledPotentialTable> {
    check_alpha(alpha)?;
    let table = killed_with_rate(model, base, alpha)?;
    Ok(KilledPotentialTable { base, table })
}

/// `h(x,y) = E_x(L^x_{T_y}) = u_{T_y}(x,x)`, with `h(x,x) = 0`.
pub fn hitting_moment_h(model: &MarkovModel, x: usize, y: usize) -> Result<f64> {
    model.check_state(x)?;
    model.check_state(y)?;
    if x == y {
        return Ok(0.0);
    }
    Ok(killed_densities(model, y)?.get(x, x))
}

/// Full `h` table, one killed solve per target state.
pub fn hitting_moment_table(model: &MarkovModel) -> Result<Table> {
    let n = model.len();
    let mut h = Table::zeros(n, n);
    for y in 0..n {
        let killed = killed_densities(model, y)?;
        for x in 0..n {
            if x != y {
                h[(x, y)] = killed.get(x, x);
            }
        }
    }
    Ok(h)
}

/// `d²(x,y) = u(x,x) − u(x,y) − u(y,x) + u(y,y)` with `u = u_{T_base}`.
pub fn intrinsic_metric(killed: &KilledPotentialTable, model: &MarkovModel) -> Result<IntrinsicMetric> {
    let n = killed.len();
    if n != model.len() {
        return Err(Error::Config {
            field: "killed".into(),
            message: alloc::format!("table has {n} states, model has {}", model.len()),
        });
    }
    let u = &killed.table;
    let mut d = Table::zeros(n, n);
    for x in 0..n {
        for y in (x + 1)..n {
            let sq = u[(x, x)] - u[(x, y)] - u[(y, x)] + u[(y, y)];
            if sq < -NEGATIVE_SQUARE_TOL {
                return Err(Error::NegativeSquare { x, y, value: sq });
            }
            let dist = libm::sqrt(sq.max(0.0));
            d[(x, y)] = dist;
            d[(y, x)] = dist;
        }
    }
    let h = hitting_moment_table(model)?;
    Ok(IntrinsicMetric { d, h })
}

/// `Γ(x,y) = u_{T_base}(x,y) + u_{T_base}(y,x)`.
pub fn covariance_kernel(killed: &KilledPotentialTable) -> Result<CovarianceKernel> {
    let u = &killed.table;
    let gamma = u + u.transpose();
    let floor = linalg::min_eigenvalue(&gamma);
    if floor < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: floor });
    }
    Ok(CovarianceKernel { base: killed.base, gamma })
}

/// Largest violations of the exact identities relating killed densities,
/// the intrinsic metric, the dual chain and the covariance kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    /// `|u_{T_x}(y,y) − u_{T_y}(x,x)|`.
    pub hitting_exchange: f64,
    /// `|d²(x,y) − h(x,y)|`.
    pub metric_equals_h: f64,
    /// `|h(x,y) − h(y,x)|` together with `|ĥ(x,y) − h(x,y)|` for the dual.
    pub h_symmetry: f64,
    /// `max(0, d(x,z) − d(x,y) − d(y,z))`.
    pub triangle: f64,
    /// `max(0, −d(x,y))` over `x ≠ y`; positive distances give 0.
    pub positivity: f64,
    /// Smallest strictly positive off-diagonal distance.
    pub min_off_diagonal_distance: f64,
    /// `|û^α(x,y) − u^α(y,x)|` over α ∈ {0.1, 1, 10}.
    pub dual_transpose: f64,
    /// `max(0, −λ_min(Γ))`.
    pub eigen_floor: f64,
    pub min_eigenvalue: f64,
}

impl IdentityReport {
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("hitting_exchange", self.hitting_exchange),
            ("metric_equals_h", self.metric_equals_h),
            ("h_symmetry", self.h_symmetry),
            ("triangle", self.triangle),
            ("positivity", self.positivity),
            ("dual_transpose", self.dual_transpose),
            ("eigen_floor", self.eigen_floor),
        ]
    }

    pub fn max_violation(&self) -> f64 {
        let mut worst = self.entries().iter().map(|e| e.1).fold(0.0, f64::max);
        if !(self.min_off_diagonal_distance > 0.0) {
            worst = f64::INFINITY;
        }
        worst
    }
}

pub const DUAL_ALPHAS: [f64; 3] = [0.1, 1.0, 10.0];

pub fn check_duality_identities(model: &MarkovModel, base: usize) -> Result<IdentityReport> {
    model.check_state(base)?;
    let n = model.len();
    let killed = killed_densities(model, base)?;
    let u = &killed.table;
    let h = hitting_moment_table(model)?;

    let mut hitting_exchange = 0.0f64;
    let mut metric_equals_h = 0.0f64;
    let mut h_symmetry = 0.0f64;
    let mut d = Table::zeros(n, n);
    let mut positivity = 0.0f64;
    let mut min_off = f64::INFINITY;
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            hitting_exchange = hitting_exchange.max((h[(y, x)] - h[(x, y)]).abs());
            let sq = u[(x, x)] - u[(x, y)] - u[(y, x)] + u[(y, y)];
            metric_equals_h = metric_equals_h.max((sq - h[(x, y)]).abs());
            h_symmetry = h_symmetry.max((h[(x, y)] - h[(y, x)]).abs());
            positivity = positivity.max(-sq);
            let dist = libm::sqrt(sq.max(0.0));
            min_off = min_off.min(dist);
            d[(x, y)] = dist;
        }
    }
    if n < 2 {
        min_off = 0.0;
    }

    let dual = model.dual();
    let dual_h = hitting_moment_table(&dual)?;
    h_symmetry = h_symmetry.max(linalg::max_abs_diff(&dual_h, &h));

    let mut triangle = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                triangle = triangle.max(d[(x, z)] - d[(x, y)] - d[(y, z)]);
            }
        }
    }

    let mut dual_transpose = 0.0f64;
    for alpha in DUAL_ALPHAS {
        let forward = resolvent_densities(model, alpha)?;
        let backward = resolvent_densities(&dual, alpha)?;
        dual_transpose = dual_transpose.max(linalg::max_abs_diff(&backward.table, &forward.table.transpose()));
    }

    let gamma = u + u.transpose();
    let min_eigenvalue = linalg::min_eigenvalue(&gamma);

    Ok(IdentityReport {
        hitting_exchange,
        metric_equals_h,
        h_symmetry,
        triangle: triangle.max(0.0),
        positivity: positivity.max(0.0),
        min_off_diagonal_distance: min_off,
        dual_transpose,
        eigen_floor: (-min_eigenvalue).max(0.0),
        min_eigenvalue,
    })
}

/// `max |u^α − u^β − (β−α) u^α M u^β|` with `M = diag(m)`.
pub fn resolvent_identity_residual(model: &MarkovModel, alpha: f64, beta: f64) -> Result<f64> {
    let ua = resolvent_densities(model, alpha)?;
    let ub = resolvent_densities(model, beta)?;
    let weights = Table::from_diagonal(&nalgebra::DVector::from_column_slice(model.invariant()));
    let composed = &ua.table * weights * &ub.table * (beta - alpha);
    let lhs = &ua.table - &ub.table;
    Ok(linalg::max_abs_diff(&lhs, &composed))
}
