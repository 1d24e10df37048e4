//! Experiments on the time-changed local time `s ↦ L^a_{τ^b(s)}` and its
//! first jump, plus the sub-Gaussian tail bound on `L^b − L^a` before
//! `τ^b(y)`.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::potential::hitting_moment_h;
use crate::runner::{replica_seed, ReplicaRunner};
use crate::sim::{NoObserver, Simulator, StopRule};
use crate::stats::{ks_one_sample, ks_two_sample, KsResult, MeanEstimate, Proportion, Z_ONE_SIDED_99};

fn distinct_states(model: &MarkovModel, a: usize, b: usize) -> Result<()> {
    model.check_state(a)?;
    model.check_state(b)?;
    if a == b {
        return Err(Error::Config { field: "b".into(), message: "a and b must differ".into() });
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config { field: field.into(), message: alloc::format!("must be finite and > 0, got {v}") })
    }
}

/// One-sided comparison of an exceedance probability with an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub bound: f64,
    pub observed: Proportion,
    pub lower_99: f64,
    pub upper_99: f64,
}

impl BoundCheck {
    fn new(bound: f64, observed: Proportion) -> Self {
        BoundCheck {
            bound,
            observed,
            lower_99: observed.lower_bound(Z_ONE_SIDED_99),
            upper_99: observed.upper_bound(Z_ONE_SIDED_99),
        }
    }

    /// Fails only on a confident violation.
    pub fn passes(&self) -> bool {
        self.lower_99 <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub a: usize,
    pub b: usize,
    pub x: f64,
    pub y: f64,
    pub h: f64,
    /// `P{∃ s ≤ τ^b(y) : L^b_s − L^a_s > x} ≤ exp(−x²/(4yh))`.
    pub one_sided: BoundCheck,
    /// `P{sup_s |y∧L^a_s − y∧L^b_s| > x} ≤ 2 exp(−x²/(4yh))`.
    pub capped_two_sided: BoundCheck,
}

impl TailReport {
    pub fn passes(&self) -> bool {
        self.one_sided.passes() && self.capped_two_sided.passes()
    }
}

/// Monte Carlo check of the sub-Gaussian tail bound for `L^b − L^a` and of
/// its two-sided form for the processes capped at level `y`.
#[allow(clippy::too_many_arguments)]
pub fn tail_bound_experiment<R: ReplicaRunner>(
    model: &MarkovModel,
    a: usize,
    b: usize,
    y: f64,
    x: f64,
    reps: usize,
    seed: u64,
    runner: &R,
) -> Result<TailReport> {
    distinct_states(model, a, b)?;
    positive("y", y)?;
    positive("x", x)?;
    let h = hitting_moment_h(model, a, b)?;
    let sim = Simulator::new(model);
    let outcomes = runner.map(reps, |i| -> Result<(bool, bool)> {
        let mut rng = replica_seed(seed, i).rng();
        let mut one_sided = false;
        let mut watch = |_: usize, _: f64, _: f64, l: &[f64]| {
            one_sided |= l[b] - l[a] > x;
            ControlFlow::Continue(())
        };
        sim.run(b, &StopRule::inverse_local_time(b, y), &mut rng, &mut watch)?;

        // Capped processes are frozen once both local times pass `y`.
        let mut capped = false;
        let mut watch = |_: usize, _: f64, _: f64, l: &[f64]| {
            capped |= (l[a].min(y) - l[b].min(y)).abs() > x;
            if l[a] >= y && l[b] >= y {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        };
        sim.run(b, &StopRule::fixed_time(f64::MAX), &mut rng, &mut watch)?;
        Ok((one_sided, capped))
    });
    let mut hits = (0, 0);
    for o in outcomes {
        let (p, q) = o?;
        hits.0 += usize::from(p);
        hits.1 += usize::from(q);
    }
    let bound = libm::exp(-x * x / (4.0 * y * h));
    Ok(TailReport {
        a,
        b,
        x,
        y,
        h,
        one_sided: BoundCheck::new(bound, Proportion { hits: hits.0, trials: reps }),
        capped_two_sided: BoundCheck::new((2.0 * bound).min(1.0), Proportion { hits: hits.1, trials: reps }),
    })
}

/// `Ψ(λ) = λ / (λh + 1)`, the Laplace exponent of `s ↦ L^a_{τ^b(s)}`.
pub fn laplace_exponent(lambda: f64, h: f64) -> f64 {
    lambda / (lambda * h + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePoint {
    pub lambda: f64,
    pub estimate: MeanEstimate,
    pub target: f64,
}

impl LaplacePoint {
    pub fn z(&self) -> f64 {
        self.estimate.z_score(self.target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceReport {
    pub a: usize,
    pub b: usize,
    pub t: f64,
    pub h: f64,
    pub points: Vec<LaplacePoint>,
    /// `E L^a_{τ^b(t)}`, target `t`.
    pub mean: MeanEstimate,
    /// `L^b_{T_a}` under `P_b`: local time elapsed before the first jump.
    pub first_jump_time: KsResult,
    /// `L^a_{T_b}` under `P_a`: size of the first jump.
    pub first_jump_size: KsResult,
}

impl LaplaceReport {
    pub fn passes(&self, band: f64, ks_alpha: f64) -> bool {
        self.points.iter().all(|p| p.z().abs() <= band)
            && self.mean.within(self.t, band)
            && self.first_jump_time.passes(ks_alpha)
            && self.first_jump_size.passes(ks_alpha)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn subordinator_experiment<R: ReplicaRunner>(
    model: &MarkovModel,
    a: usize,
    b: usize,
    lambda_grid: &[f64],
    t: f64,
    reps: usize,
    seed: u64,
    runner: &R,
) -> Result<LaplaceReport> {
    distinct_states(model, a, b)?;
    positive("t", t)?;
    for &l in lambda_grid {
        positive("lambda", l)?;
    }
    if reps < crate::excursion::MIN_RECORDS {
        return Err(Error::InsufficientData { have: reps, need: crate::excursion::MIN_RECORDS });
    }
    let h = hitting_moment_h(model, a, b)?;
    let sim = Simulator::new(model);
    let samples = runner.map(reps, |i| -> Result<[f64; 3]> {
        let mut rng = replica_seed(seed, i).rng();
        let level = sim.run(b, &StopRule::inverse_local_time(b, t), &mut rng, &mut NoObserver)?;
        let before = sim.run(b, &StopRule::hitting(a), &mut rng, &mut NoObserver)?;
        let jump = sim.run(a, &StopRule::hitting(b), &mut rng, &mut NoObserver)?;
        Ok([level.local_times[a], before.local_times[b], jump.local_times[a]])
    });
    let mut columns: [Vec<f64>; 3] = [Vec::with_capacity(reps), Vec::with_capacity(reps), Vec::with_capacity(reps)];
    for s in samples {
        let s = s?;
        for k in 0..3 {
            columns[k].push(s[k]);
        }
    }
    let points = lambda_grid
        .iter()
        .map(|&lambda| {
            let transformed: Vec<f64> = columns[0].iter().map(|l| libm::exp(-lambda * l)).collect();
            LaplacePoint {
                lambda,
                estimate: MeanEstimate::from_samples(&transformed),
                target: libm::exp(-t * laplace_exponent(lambda, h)),
            }
        })
        .collect();
    let exp_cdf = |v: f64| if v <= 0.0 { 0.0 } else { -libm::expm1(-v / h) };
    Ok(LaplaceReport {
        a,
        b,
        t,
        h,
        points,
        mean: MeanEstimate::from_samples(&columns[0]),
        first_jump_time: ks_one_sample(&columns[1], exp_cdf),
        first_jump_size: ks_one_sample(&columns[2], exp_cdf),
    })
}

/// Strong Markov diagnostic at `T_target`: the law of the local time at
/// `target` accumulated after `T_target` and before returning to `start`
/// must not depend on whether `T_target` was short or long. Returns the
/// two-sample KS comparison of the two halves split at the median.
pub fn strong_markov_check<R: ReplicaRunner>(
    model: &MarkovModel,
    start: usize,
    target: usize,
    reps: usize,
    seed: u64,
    runner: &R,
) -> Result<KsResult> {
    distinct_states(model, start, target)?;
    let sim = Simulator::new(model);
    let pairs = runner.map(reps, |i| -> Result<(f64, f64)> {
        let mut rng = replica_seed(seed, i).rng();
        let pre = sim.run(start, &StopRule::hitting(target), &mut rng, &mut NoObserver)?;
        let post = sim.run(target, &StopRule::hitting(start), &mut rng, &mut NoObserver)?;
        Ok((pre.total_time, post.local_times[target]))
    });
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let pre: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let median = crate::stats::quantile(&pre, 0.5);
    let (short, long): (Vec<&(f64, f64)>, Vec<_>) = pairs.iter().partition(|p| p.0 <= median);
    let short: Vec<f64> = short.iter().map(|p| p.1).collect();
    let long: Vec<f64> = long.iter().map(|p| p.1).collect();
    Ok(ks_two_sample(&short, &long))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Family;
    use crate::runner::Sequential;

    #[test]
    fn exponent_limits() {
        assert!((laplace_exponent(1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!(laplace_exponent(1e-9, 2.0) < 1.1e-9);
        // Ψ'(0) = 1: no drift, jumps of mean h at rate 1/h.
        let d = (laplace_exponent(1e-7, 2.0) - laplace_exponent(0.0, 2.0)) / 1e-7;
        assert!((d - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tail_probability_vanishes_beyond_level() {
        let m = MarkovModel::build(&Family::TwoState { a: 1.0, b: 1.0 }).unwrap();
        // L^b never exceeds y before τ^b(y), so x ≥ y cannot be exceeded.
        let r = tail_bound_experiment(&m, 0, 1, 1.0, 3.0, 500, 1, &Sequential).unwrap();
        assert_eq!(r.one_sided.observed.hits, 0);
        assert!((r.one_sided.bound - libm::exp(-9.0 / 8.0)).abs() < 1e-12);
        assert!(r.passes());
    }

    #[test]
    fn same_states_rejected() {
        let m = MarkovModel::build(&Family::TwoState { a: 1.0, b: 1.0 }).unwrap();
        assert!(tail_bound_experiment(&m, 1, 1, 1.0, 1.0, 10, 1, &Sequential).is_err());
        assert!(subordinator_experiment(&m, 0, 1, &[1.0], 1.0, 10, 1, &Sequential).is_err());
    }
}
