//! The centered Gaussian field attached to a covariance kernel, and the
//! recurrent-case isomorphism between local times at `τ^base(n)` and
//! squared Gaussian fields.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, Table};
use crate::model::MarkovModel;
use crate::potential::{killed_densities, CovarianceKernel, PSD_TOL};
use crate::runner::{replica_seed, ReplicaRunner};
use crate::sim::{NoObserver, Simulator, StopRule};
use crate::stats::{self, ks_two_sample, KsResult, MeanEstimate};

/// Reversibility tolerance required by the isomorphism experiment.
pub const REVERSIBILITY_TOL: f64 = 1e-12;

/// Draws `φ = F z` with `F Fᵀ = Γ` and `z` standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSampler {
    pub covariance: Table,
    /// `N × rank` factor.
    pub factor: Table,
    pub reconstruction_error: f64,
}

impl GaussianSampler {
    /// Factorizes `cov` by symmetric eigendecomposition. Rows with zero
    /// variance get an exactly zero factor row; eigenvalues in `[−tol, 0)`
    /// are dropped.
    pub fn new(cov: &Table, tol: f64) -> Result<Self> {
        let n = cov.nrows();
        let active: Vec<usize> = (0..n).filter(|&i| cov[(i, i)] > 0.0).collect();
        for i in 0..n {
            if active.contains(&i) {
                continue;
            }
            let row_max = (0..n).map(|j| cov[(i, j)].abs()).fold(0.0, f64::max);
            if cov[(i, i)] < -tol || row_max > tol {
                return Err(Error::NotPsd { min_eigenvalue: linalg::min_eigenvalue(cov) });
            }
        }
        let sub = linalg::submatrix(cov, &active);
        let (values, vectors) = linalg::symmetric_eigen(&sub);
        if let Some(&low) = values.first() {
            if low < -tol {
                return Err(Error::NotPsd { min_eigenvalue: low });
            }
        }
        let kept: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 0.0).collect();
        let mut factor = Table::zeros(n, kept.len());
        for (c, &k) in kept.iter().enumerate() {
            let scale = libm::sqrt(values[k]);
            for (r, &i) in active.iter().enumerate() {
                factor[(i, c)] = vectors[(r, k)] * scale;
            }
        }
        let reconstruction_error = linalg::max_abs_diff(&(&factor * factor.transpose()), cov);
        Ok(GaussianSampler { covariance: cov.clone(), factor, reconstruction_error })
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.rank()).map(|_| StandardNormal.sample(rng)).collect();
        (0..self.dim()).map(|i| (0..self.rank()).map(|k| self.factor[(i, k)] * z[k]).sum()).collect()
    }
}

pub fn build_sampler(kernel: &CovarianceKernel, tol: f64) -> Result<GaussianSampler> {
    GaussianSampler::new(&kernel.gamma, tol)
}

pub fn build_sampler_default(kernel: &CovarianceKernel) -> Result<GaussianSampler> {
    build_sampler(kernel, PSD_TOL)
}

/// `reps` independent draws, one substream per draw.
pub fn sample_field<R: ReplicaRunner>(sampler: &GaussianSampler, reps: usize, seed: u64, runner: &R) -> Vec<Vec<f64>> {
    runner.map(reps, |i| sampler.sample(&mut replica_seed(seed, i).rng()))
}

/// Per-state comparison of `L^x_{τ(n)} + ψ_x²/2` with `(ψ'_x + √(2n))²/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsomorphismState {
    pub state: usize,
    /// `n + u(x,x)/2`, shared by both sides.
    pub target_mean: f64,
    /// Left side: `n Γ(x,x) + u(x,x)²/2`.
    pub target_var_local: f64,
    /// Right side: `2 n u(x,x) + u(x,x)²/2`.
    pub target_var_gaussian: f64,
    pub local_mean: MeanEstimate,
    pub gaussian_mean: MeanEstimate,
    /// `(variance, standard error)` of each side.
    pub local_var: (f64, f64),
    pub gaussian_var: (f64, f64),
    pub ks: KsResult,
}

impl IsomorphismState {
    pub fn moment_z_scores(&self) -> [f64; 4] {
        [
            self.local_mean.z_score(self.target_mean),
            self.gaussian_mean.z_score(self.target_mean),
            stats::z_score(self.local_var.0, self.target_var_local, self.local_var.1),
            stats::z_score(self.gaussian_var.0, self.target_var_gaussian, self.gaussian_var.1),
        ]
    }

    pub fn targets_agree(&self) -> bool {
        let scale = self.target_var_local.abs().max(1.0);
        (self.target_var_local - self.target_var_gaussian).abs() <= 1e-9 * scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub base: usize,
    pub n: f64,
    pub reps: usize,
    pub states: Vec<IsomorphismState>,
    /// Per-state KS level after Bonferroni over states.
    pub ks_alpha: f64,
    /// Largest `|LHS − RHS|` at the base state, where both equal `n`.
    pub base_defect: f64,
    /// Raw per-replica samples of both sides, `reps × N` each.
    pub local_side: Vec<Vec<f64>>,
    pub gaussian_side: Vec<Vec<f64>>,
}

impl GofResult {
    pub fn passes(&self, band: f64) -> bool {
        self.states.iter().all(|s| {
            s.targets_agree() && s.ks.passes(self.ks_alpha) && s.moment_z_scores().iter().all(|z| z.abs() <= band)
        }) && self.base_defect <= 1e-9 * self.n.max(1.0)
    }
}

/// Isomorphism experiment for reversible models: compares
/// `(L^x_{τ^base(n)} + ψ_x²/2)_x` with `((ψ'_x + √(2n))²/2)_x` where `ψ`,
/// `ψ'` are independent centered fields with covariance `u_{T_base}`.
#[allow(clippy::too_many_arguments)]
pub fn isomorphism_experiment<R: ReplicaRunner>(
    model: &MarkovModel,
    base: usize,
    n: f64,
    reps: usize,
    alpha: f64,
    seed: u64,
    runner: &R,
) -> Result<GofResult> {
    model.check_state(base)?;
    let violation = model.reversibility_violation();
    if violation > REVERSIBILITY_TOL {
        return Err(Error::NotSymmetric { violation });
    }
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Config { field: "n".into(), message: alloc::format!("must be > 0, got {n}") });
    }
    if reps < crate::excursion::MIN_RECORDS {
        return Err(Error::InsufficientData { have: reps, need: crate::excursion::MIN_RECORDS });
    }
    let killed = killed_densities(model, base)?;
    let u = &killed.table;
    let psi_cov = (u + u.transpose()) * 0.5;
    let psi = GaussianSampler::new(&psi_cov, PSD_TOL)?;
    let sim = Simulator::new(model);
    let shift = libm::sqrt(2.0 * n);

    let draws = runner.map(reps, |i| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = replica_seed(seed, i).rng();
        let run = sim.run(base, &StopRule::inverse_local_time(base, n), &mut rng, &mut NoObserver)?;
        let a = psi.sample(&mut rng);
        let b = psi.sample(&mut rng);
        let lhs = run.local_times.iter().zip(&a).map(|(l, p)| l + p * p / 2.0).collect();
        let rhs = b.iter().map(|p| (p + shift) * (p + shift) / 2.0).collect();
        Ok((lhs, rhs))
    });
    let mut local_side = Vec::with_capacity(reps);
    let mut gaussian_side = Vec::with_capacity(reps);
    for d in draws {
        let (l, r) = d?;
        local_side.push(l);
        gaussian_side.push(r);
    }

    let dim = model.len();
    let mut base_defect = 0.0f64;
    for (l, r) in local_side.iter().zip(&gaussian_side) {
        base_defect = base_defect.max((l[base] - n).abs()).max((r[base] - n).abs());
    }
    let others: Vec<usize> = (0..dim).filter(|&x| x != base).collect();
    let ks_alpha = alpha / others.len().max(1) as f64;
    let mut states = Vec::with_capacity(others.len());
    let mut left = vec![0.0; reps];
    let mut right = vec![0.0; reps];
    for &x in &others {
        for k in 0..reps {
            left[k] = local_side[k][x];
            right[k] = gaussian_side[k][x];
        }
        let var = psi_cov[(x, x)];
        let gamma = 2.0 * var;
        states.push(IsomorphismState {
            state: x,
            target_mean: n + var / 2.0,
            target_var_local: n * gamma + var * var / 2.0,
            target_var_gaussian: 2.0 * n * var + var * var / 2.0,
            local_mean: MeanEstimate::from_samples(&left),
            gaussian_mean: MeanEstimate::from_samples(&right),
            local_var: stats::variance_estimate(&left),
            gaussian_var: stats::variance_estimate(&right),
            ks: ks_two_sample(&left, &right),
        });
    }
    Ok(GofResult { base, n, reps, states, ks_alpha, base_defect, local_side, gaussian_side })
}
