//! Excursions from a base state and estimators of the excursion measure.
//!
//! Over `[0, τ^base(s)]` the excursions form a Poisson point process in
//! base local time with intensity `ν`, so `ν(f)` is estimated by
//! `Σ f / s` with standard error `sqrt(Σ f²) / s`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::potential::{CovarianceKernel, KilledPotentialTable};
use crate::sim::PathSegmentLog;
use crate::stats::z_score;

pub const MIN_RECORDS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionRecord {
    /// Departure time from the base.
    pub start_time: f64,
    pub duration: f64,
    /// Local time accrued at each state during the excursion.
    pub visited: Vec<f64>,
    /// Whether the excursion reached each state before returning.
    pub hit_flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionSet {
    pub base: usize,
    pub records: Vec<ExcursionRecord>,
    /// Incomplete excursions cut off by the horizon (0 or 1).
    pub discarded: usize,
    /// `L^base` at the horizon.
    pub base_local_time: f64,
}

/// Splits a path started at `base` into its complete excursions.
pub fn excursions(path: &PathSegmentLog, model: &MarkovModel, base: usize) -> Result<ExcursionSet> {
    model.check_state(base)?;
    if path.start != base {
        return Err(Error::Config {
            field: "start".into(),
            message: alloc::format!("path starts at {} but excursions are taken from {base}", path.start),
        });
    }
    let n = model.len();
    let m = model.invariant();
    let mut records = Vec::new();
    let mut current: Option<ExcursionRecord> = None;
    let mut t = 0.0;
    for seg in &path.segments {
        if seg.state == base {
            if let Some(mut e) = current.take() {
                e.duration = t - e.start_time;
                records.push(e);
            }
        } else {
            let e = current.get_or_insert_with(|| ExcursionRecord {
                start_time: t,
                duration: 0.0,
                visited: vec![0.0; n],
                hit_flags: vec![false; n],
            });
            e.visited[seg.state] += seg.duration / m[seg.state];
            e.hit_flags[seg.state] = true;
        }
        t += seg.duration;
    }
    let mut discarded = 0;
    if let Some(mut e) = current {
        // A path stopped on entering the base closes its last excursion.
        if path.end_state == base {
            e.duration = path.total_time - e.start_time;
            records.push(e);
        } else {
            discarded = 1;
        }
    }
    Ok(ExcursionSet { base, records, discarded, base_local_time: path.terminal_local_times[base] })
}

/// An estimate of `ν(f)` against its exact value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
}

impl MeasureEstimate {
    fn from_sums(sum: f64, sum_sq: f64, s: f64, target: f64) -> Self {
        MeasureEstimate { estimate: sum / s, se: libm::sqrt(sum_sq) / s, target }
    }

    pub fn z(&self) -> f64 {
        z_score(self.estimate, self.target, self.se)
    }

    pub fn passes(&self, band: f64) -> bool {
        self.z().abs() <= band
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionMomentReport {
    pub base: usize,
    pub local_time_level: f64,
    pub records: usize,
    /// `ν(L^x)` per non-base state, target 1.
    pub first_moment: Vec<(usize, MeasureEstimate)>,
    /// `ν(L^x L^y)` per unordered non-base pair, target `Γ(x,y)`.
    pub second_moment: Vec<((usize, usize), MeasureEstimate)>,
    /// `ν(T_x < T_base)` per non-base state, target `1/u_{T_base}(x,x)`.
    pub hit_rate: Vec<(usize, MeasureEstimate)>,
}

impl ExcursionMomentReport {
    pub fn all(&self) -> impl Iterator<Item = &MeasureEstimate> {
        self.first_moment
            .iter()
            .map(|e| &e.1)
            .chain(self.second_moment.iter().map(|e| &e.1))
            .chain(self.hit_rate.iter().map(|e| &e.1))
    }

    pub fn passes(&self, band: f64) -> bool {
        self.all().all(|e| e.passes(band))
    }
}

/// Estimates `ν(L^x)`, `ν(L^x L^y)` and `ν(T_x < T_base)` from the
/// excursions of `[0, τ^base(s)]`.
pub fn excursion_functionals(
    set: &ExcursionSet,
    s: f64,
    killed: &KilledPotentialTable,
    gamma: &CovarianceKernel,
) -> Result<ExcursionMomentReport> {
    if set.records.len() < MIN_RECORDS {
        return Err(Error::InsufficientData { have: set.records.len(), need: MIN_RECORDS });
    }
    let base = set.base;
    let n = killed.len();
    let others: Vec<usize> = (0..n).filter(|&x| x != base).collect();

    let mut first_moment = Vec::new();
    let mut hit_rate = Vec::new();
    for &x in &others {
        let (mut sum, mut sq, mut hits) = (0.0, 0.0, 0.0);
        for r in &set.records {
            let l = r.visited[x];
            sum += l;
            sq += l * l;
            if r.hit_flags[x] {
                hits += 1.0;
            }
        }
        first_moment.push((x, MeasureEstimate::from_sums(sum, sq, s, 1.0)));
        hit_rate.push((x, MeasureEstimate::from_sums(hits, hits, s, 1.0 / killed.get(x, x))));
    }

    let mut second_moment = Vec::new();
    for (i, &x) in others.iter().enumerate() {
        for &y in &others[i..] {
            let (mut sum, mut sq) = (0.0, 0.0);
            for r in &set.records {
                let v = r.visited[x] * r.visited[y];
                sum += v;
                sq += v * v;
            }
            second_moment.push(((x, y), MeasureEstimate::from_sums(sum, sq, s, gamma.get(x, y))));
        }
    }

    Ok(ExcursionMomentReport {
        base,
        local_time_level: s,
        records: set.records.len(),
        first_moment,
        second_moment,
        hit_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Family;
    use crate::potential::{covariance_kernel, killed_densities};
    use crate::rng::RngSeed;
    use crate::sim::{simulate, StopRule};

    #[test]
    fn two_state_excursions_visit_other_state() {
        let m = MarkovModel::build(&Family::TwoState { a: 1.0, b: 1.0 }).unwrap();
        let mut rng = RngSeed::new(4, 0).rng();
        let p = simulate(&m, 0, &StopRule::inverse_local_time(0, 200.0), &mut rng).unwrap();
        let set = excursions(&p, &m, 0).unwrap();
        assert_eq!(set.discarded, 0);
        assert_eq!(set.base_local_time, 200.0);
        for r in &set.records {
            assert!(r.hit_flags[1]);
            assert_eq!(r.visited[0], 0.0);
            assert!(r.duration > 0.0);
        }
        let k = killed_densities(&m, 0).unwrap();
        let g = covariance_kernel(&k).unwrap();
        let report = excursion_functionals(&set, 200.0, &k, &g).unwrap();
        assert_eq!(report.first_moment.len(), 1);
        assert_eq!(report.second_moment.len(), 1);
    }

    #[test]
    fn fixed_time_horizon_discards_open_excursion() {
        let m = MarkovModel::build(&Family::CycleWalk { n: 3, p: 2.0, q: 1.0 }).unwrap();
        let mut found = false;
        for stream in 0..20 {
            let mut rng = RngSeed::new(8, stream).rng();
            let p = simulate(&m, 0, &StopRule::fixed_time(5.0), &mut rng).unwrap();
            let set = excursions(&p, &m, 0).unwrap();
            let open = p.segments.last().unwrap().state != 0;
            assert_eq!(set.discarded, usize::from(open));
            found |= open;
        }
        assert!(found);
    }

    #[test]
    fn hitting_rule_closes_last_excursion() {
        let m = MarkovModel::build(&Family::CycleWalk { n: 3, p: 2.0, q: 1.0 }).unwrap();
        let mut rng = RngSeed::new(8, 1).rng();
        // Leave 0, then stop on return.
        let mut p = simulate(&m, 1, &StopRule::hitting(0), &mut rng).unwrap();
        p.start = 0;
        p.segments.insert(0, crate::sim::Segment { state: 0, duration: 0.5 });
        p.total_time += 0.5;
        let set = excursions(&p, &m, 0).unwrap();
        assert_eq!(set.records.len(), 1);
        assert_eq!(set.discarded, 0);
        assert!((set.records[0].start_time - 0.5).abs() < 1e-15);
    }

    #[test]
    fn too_few_records() {
        let m = MarkovModel::build(&Family::TwoState { a: 1.0, b: 1.0 }).unwrap();
        let mut rng = RngSeed::new(4, 0).rng();
        let p = simulate(&m, 0, &StopRule::inverse_local_time(0, 2.0), &mut rng).unwrap();
        let set = excursions(&p, &m, 0).unwrap();
        let k = killed_densities(&m, 0).unwrap();
        let g = covariance_kernel(&k).unwrap();
        assert!(matches!(excursion_functionals(&set, 2.0, &k, &g), Err(Error::InsufficientData { need: 30, .. })));
    }

    #[test]
    fn wrong_start_rejected() {
        let m = MarkovModel::build(&Family::TwoState { a: 1.0, b: 1.0 }).unwrap();
        let mut rng = RngSeed::new(4, 0).rng();
        let p = simulate(&m, 1, &StopRule::fixed_time(1.0), &mut rng).unwrap();
        assert!(excursions(&p, &m, 0).is_err());
    }
}
