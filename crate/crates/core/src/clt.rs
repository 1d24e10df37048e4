//! Central limit experiments for `Y_n = (L_{τ^base(n)} − n)/√n`.
//!
//! Mean 0 and covariance `Γ` hold exactly at every `n`; Gaussianity is
//! only asymptotic, so distributional checks below `ASYMPTOTIC_LEVEL` are
//! labelled pre-asymptotic instead of failing.

use alloc::vec;
use alloc::vec::Vec;

use crate::entropy::{EntropyProfile, FiniteMetricSpace};
use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::potential::CovarianceKernel;
use crate::runner::{replica_seed, ReplicaRunner};
use crate::sim::{NoObserver, Simulator, StopRule};
use crate::stats::{self, ks_one_sample, normal_cdf, KsResult, MeanEstimate, Proportion};

pub const MIN_REPS: usize = 100;
/// Levels from which distributional checks count as failures.
pub const ASYMPTOTIC_LEVEL: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Failed, but at a level where the limit law is not expected yet.
    PreAsymptotic,
}

impl Verdict {
    fn judge(ok: bool, n: f64) -> Self {
        if ok {
            Verdict::Pass
        } else if n < ASYMPTOTIC_LEVEL {
            Verdict::PreAsymptotic
        } else {
            Verdict::Fail
        }
    }

    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::PreAsymptotic => "pre-asymptotic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltSample {
    pub base: usize,
    pub n: f64,
    pub seed: u64,
    /// `reps × N`; the base column is exactly zero.
    pub values: Vec<Vec<f64>>,
}

impl CltSample {
    pub fn reps(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn column(&self, x: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[x]).collect()
    }
}

pub fn sample_yn<R: ReplicaRunner>(
    model: &MarkovModel,
    base: usize,
    n: f64,
    reps: usize,
    seed: u64,
    runner: &R,
) -> Result<CltSample> {
    model.check_state(base)?;
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Config { field: "n".into(), message: alloc::format!("must be > 0, got {n}") });
    }
    if reps < MIN_REPS {
        return Err(Error::InsufficientData { have: reps, need: MIN_REPS });
    }
    let sim = Simulator::new(model);
    let root = libm::sqrt(n);
    let rows = runner.map(reps, |i| -> Result<Vec<f64>> {
        let mut rng = replica_seed(seed, i).rng();
        let run = sim.run(base, &StopRule::inverse_local_time(base, n), &mut rng, &mut NoObserver)?;
        let mut y: Vec<f64> = run.local_times.iter().map(|l| (l - n) / root).collect();
        y[base] = 0.0;
        Ok(y)
    });
    let values = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CltSample { base, n, seed, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub n: f64,
    /// `E Y_n(x)`, target 0.
    pub mean: Vec<MeanEstimate>,
    /// `E Y_n(x) Y_n(y)`, target `Γ(x,y)`, as a row-major `N × N` table.
    pub second: Vec<MeanEstimate>,
    pub target: Vec<f64>,
    pub dim: usize,
    pub band: f64,
}

impl MomentReport {
    pub fn mean_z(&self, x: usize) -> f64 {
        self.mean[x].z_score(0.0)
    }

    pub fn cov_z(&self, x: usize, y: usize) -> f64 {
        self.second[x * self.dim + y].z_score(self.target[x * self.dim + y])
    }

    pub fn max_abs_z(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.dim {
            worst = worst.max(self.mean_z(x).abs());
            for y in 0..self.dim {
                worst = worst.max(self.cov_z(x, y).abs());
            }
        }
        worst
    }

    pub fn passes(&self) -> bool {
        self.max_abs_z() <= self.band
    }
}

/// Mean and second-moment z-scores. Because the mean is known to be 0,
/// the covariance is estimated by the raw product moment, whose
/// expectation is exactly `Γ` at every `n`.
pub fn moment_checks(sample: &CltSample, gamma: &CovarianceKernel) -> MomentReport {
    let dim = sample.dim();
    let columns: Vec<Vec<f64>> = (0..dim).map(|x| sample.column(x)).collect();
    let mean = columns.iter().map(|c| MeanEstimate::from_samples(c)).collect();
    let mut second = Vec::with_capacity(dim * dim);
    let mut target = Vec::with_capacity(dim * dim);
    for x in 0..dim {
        for y in 0..dim {
            let products: Vec<f64> = columns[x].iter().zip(&columns[y]).map(|(a, b)| a * b).collect();
            second.push(MeanEstimate::from_samples(&products));
            target.push(gamma.get(x, y));
        }
    }
    MomentReport { n: sample.n, mean, second, target, dim, band: stats::Z_ACCEPT }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    pub n: f64,
    /// Per tested state: KS of `Y_n(x)` against `N(0, Γ(x,x))`.
    pub tests: Vec<(usize, KsResult)>,
    pub alpha: f64,
    pub alpha_per_test: f64,
    pub verdict: Verdict,
}

pub fn marginal_gof(sample: &CltSample, gamma: &CovarianceKernel, alpha: f64) -> MarginalReport {
    let tested: Vec<usize> = (0..sample.dim()).filter(|&x| x != sample.base && gamma.get(x, x) > 0.0).collect();
    let alpha_per_test = alpha / tested.len().max(1) as f64;
    let tests: Vec<(usize, KsResult)> = tested
        .iter()
        .map(|&x| {
            let sd = libm::sqrt(gamma.get(x, x));
            (x, ks_one_sample(&sample.column(x), |v| normal_cdf(v / sd)))
        })
        .collect();
    let ok = tests.iter().all(|(_, r)| r.passes(alpha_per_test));
    MarginalReport { n: sample.n, tests, alpha, alpha_per_test, verdict: Verdict::judge(ok, sample.n) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfProbe {
    pub t: Vec<f64>,
    pub empirical: (f64, f64),
    pub target: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfReport {
    pub n: f64,
    pub probes: Vec<CfProbe>,
    pub sup_discrepancy: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Bonferroni inflation of the 3/√reps band for `count` probes at level
/// `alpha`: `max(1, z_{1−α/(2·count)} / 3)`.
pub fn probe_adjustment(count: usize, alpha: f64) -> f64 {
    let z = stats::normal_quantile(1.0 - alpha / (2.0 * count.max(1) as f64));
    (z / stats::Z_ACCEPT).max(1.0)
}

/// Axis probes `r e_x` (r ∈ {0.25, 0.5, 1, 2}) and diagonal probes
/// `r (e_x ± e_y)/√2` (r ∈ {0.5, 1, 2}) over the first `max_states`
/// non-base states; every probe has norm ≤ 2.
pub fn default_probe_grid(dim: usize, base: usize, max_states: usize) -> Vec<Vec<f64>> {
    let states: Vec<usize> = (0..dim).filter(|&x| x != base).take(max_states).collect();
    let mut grid = Vec::new();
    for &x in &states {
        for r in [0.25, 0.5, 1.0, 2.0] {
            let mut t = vec![0.0; dim];
            t[x] = r;
            grid.push(t);
        }
    }
    let c = core::f64::consts::FRAC_1_SQRT_2;
    for (i, &x) in states.iter().enumerate() {
        for &y in &states[i + 1..] {
            for sign in [1.0, -1.0] {
                for r in [0.5, 1.0, 2.0] {
                    let mut t = vec![0.0; dim];
                    t[x] = r * c;
                    t[y] = sign * r * c;
                    grid.push(t);
                }
            }
        }
    }
    grid
}

/// `sup_t |E e^{i⟨t,Y_n⟩} − exp(−tᵀΓt/2)|` over the probe grid.
pub fn joint_cf_check(sample: &CltSample, gamma: &CovarianceKernel, probes: &[Vec<f64>], alpha: f64) -> CfReport {
    let reps = sample.reps() as f64;
    let dim = sample.dim();
    let mut out = Vec::with_capacity(probes.len());
    let mut sup = 0.0f64;
    for t in probes {
        let (mut re, mut im) = (0.0, 0.0);
        for row in &sample.values {
            let phase: f64 = t.iter().zip(row).map(|(a, b)| a * b).sum();
            re += libm::cos(phase);
            im += libm::sin(phase);
        }
        re /= reps;
        im /= reps;
        let mut quad = 0.0;
        for x in 0..dim {
            for y in 0..dim {
                quad += t[x] * gamma.get(x, y) * t[y];
            }
        }
        let target = libm::exp(-quad / 2.0);
        let discrepancy = if t.iter().all(|&v| v == 0.0) { 0.0 } else { libm::hypot(re - target, im) };
        sup = sup.max(discrepancy);
        out.push(CfProbe { t: t.clone(), empirical: (re, im), target, discrepancy });
    }
    let threshold = stats::Z_ACCEPT / libm::sqrt(reps) * probe_adjustment(probes.len(), alpha);
    CfReport {
        n: sample.n,
        probes: out,
        sup_discrepancy: sup,
        threshold,
        verdict: Verdict::judge(sup <= threshold, sample.n),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationRow {
    pub delta: f64,
    pub eta_at_delta: f64,
    pub exceed: Proportion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessLevel {
    pub n: f64,
    /// `P{ max_{d(a,b)<δ} |Y_n(a) − Y_n(b)| > η₀ }` per δ.
    pub oscillation: Vec<OscillationRow>,
    /// `P{ max_x L^x_{τ(n)} > n + λ√n }` per λ.
    pub sup_exceed: Vec<(f64, Proportion)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessReport {
    pub eta0: f64,
    pub levels: Vec<TightnessLevel>,
    /// Estimates nonincreasing in λ at every level.
    pub monotone_in_lambda: bool,
    /// Oscillation estimates nonincreasing as δ decreases at every level.
    pub monotone_in_delta: bool,
    /// No later level exceeds an earlier one by more than `band` combined
    /// standard errors, for the sup-exceedance probabilities.
    pub stable_in_n: bool,
    /// Same comparison for the smallest-δ oscillation probability.
    pub oscillation_stable_in_n: bool,
    pub band: f64,
}

fn grows_beyond(later: &Proportion, earlier: &Proportion, band: f64) -> bool {
    let se = libm::hypot(later.se(), earlier.se());
    later.estimate() - earlier.estimate() > band * se
}

/// Tightness proxies on the states of `space`, across the given samples
/// (ordered by increasing `n`).
pub fn tightness_diagnostic(
    samples: &[CltSample],
    space: &FiniteMetricSpace,
    profile: &EntropyProfile,
    eta0: f64,
    delta_grid: &[f64],
    lambda_grid: &[f64],
) -> Result<TightnessReport> {
    if samples.is_empty() || samples.iter().any(|s| s.reps() < 2) {
        return Err(Error::InsufficientData { have: samples.iter().map(CltSample::reps).min().unwrap_or(0), need: 2 });
    }
    let mut deltas = delta_grid.to_vec();
    deltas.sort_by(f64::total_cmp);
    let mut lambdas = lambda_grid.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let k = space.len();
    let mut levels = Vec::with_capacity(samples.len());
    for sample in samples {
        let reps = sample.reps();
        let mut osc_hits = vec![0usize; deltas.len()];
        let mut sup_hits = vec![0usize; lambdas.len()];
        for row in &sample.values {
            for (di, &delta) in deltas.iter().enumerate() {
                let mut osc = 0.0f64;
                for i in 0..k {
                    for j in (i + 1)..k {
                        if space.dist[(i, j)] < delta {
                            osc = osc.max((row[space.points[i]] - row[space.points[j]]).abs());
                        }
                    }
                }
                if osc > eta0 {
                    osc_hits[di] += 1;
                }
            }
            let sup = space.points.iter().map(|&x| row[x]).fold(f64::NEG_INFINITY, f64::max);
            for (li, &lambda) in lambdas.iter().enumerate() {
                if sup > lambda {
                    sup_hits[li] += 1;
                }
            }
        }
        levels.push(TightnessLevel {
            n: sample.n,
            oscillation: deltas
                .iter()
                .zip(&osc_hits)
                .map(|(&delta, &hits)| OscillationRow {
                    delta,
                    eta_at_delta: profile.eta(delta),
                    exceed: Proportion { hits, trials: reps },
                })
                .collect(),
            sup_exceed: lambdas
                .iter()
                .zip(&sup_hits)
                .map(|(&l, &hits)| (l, Proportion { hits, trials: reps }))
                .collect(),
        });
    }
    let monotone_in_lambda =
        levels.iter().all(|lv| lv.sup_exceed.windows(2).all(|w| w[1].1.estimate() <= w[0].1.estimate()));
    let monotone_in_delta =
        levels.iter().all(|lv| lv.oscillation.windows(2).all(|w| w[0].exceed.estimate() <= w[1].exceed.estimate()));
    let band = stats::Z_ACCEPT;
    let mut stable_in_n = true;
    let mut oscillation_stable_in_n = true;
    for (i, earlier) in levels.iter().enumerate() {
        for later in &levels[i + 1..] {
            for (a, b) in earlier.sup_exceed.iter().zip(&later.sup_exceed) {
                stable_in_n &= !grows_beyond(&b.1, &a.1, band);
            }
            if let (Some(a), Some(b)) = (earlier.oscillation.first(), later.oscillation.first()) {
                oscillation_stable_in_n &= !grows_beyond(&b.exceed, &a.exceed, band);
            }
        }
    }
    Ok(TightnessReport {
        eta0,
        levels,
        monotone_in_lambda,
        monotone_in_delta,
        stable_in_n,
        oscillation_stable_in_n,
        band,
    })
}
