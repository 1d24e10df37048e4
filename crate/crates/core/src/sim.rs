//! Exact event-driven simulation of the chain and path functionals.
//!
//! Sojourns are drawn exactly and the final sojourn is truncated at the
//! moment the stop rule fires, so hitting times and local times carry no
//! discretization error.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::model::MarkovModel;

pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopKind {
    /// Stop at deterministic time `t`.
    FixedTime(f64),
    /// Stop at `T_x`, the first hit of `x` (time 0 when started at `x`).
    Hitting(usize),
    /// Stop at `τ^state(level) = inf{t : L^state_t > level}`.
    InverseLocalTime { state: usize, level: f64 },
    /// Stop at `τ^state(level)` or as soon as some local time reaches `cap`,
    /// whichever comes first.
    CappedInverseLocalTime { state: usize, level: f64, cap: f64 },
}

/// A stop condition plus a hard limit on the number of jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub kind: StopKind,
    pub budget: u64,
}

impl StopRule {
    pub fn new(kind: StopKind) -> Self {
        StopRule { kind, budget: DEFAULT_BUDGET }
    }

    pub fn fixed_time(t: f64) -> Self {
        Self::new(StopKind::FixedTime(t))
    }

    pub fn hitting(state: usize) -> Self {
        Self::new(StopKind::Hitting(state))
    }

    pub fn inverse_local_time(state: usize, level: f64) -> Self {
        Self::new(StopKind::InverseLocalTime { state, level })
    }

    pub fn capped(state: usize, level: f64, cap: f64) -> Self {
        Self::new(StopKind::CappedInverseLocalTime { state, level, cap })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    fn validate(&self, model: &MarkovModel) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config { field: field.into(), message: alloc::format!("must be finite and >= 0, got {v}") })
            }
        };
        if self.budget == 0 {
            return Err(Error::Config { field: "budget".into(), message: "must be > 0".into() });
        }
        match self.kind {
            StopKind::FixedTime(t) => positive("t", t),
            StopKind::Hitting(x) => model.check_state(x),
            StopKind::InverseLocalTime { state, level } => {
                model.check_state(state)?;
                positive("level", level)
            }
            StopKind::CappedInverseLocalTime { state, level, cap } => {
                model.check_state(state)?;
                positive("level", level)?;
                positive("cap", cap)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalReason {
    FixedTime,
    Hitting,
    InverseLocalTime,
    LocalTimeCap,
    /// An observer asked to stop.
    Observer,
}

/// Receives each sojourn as it completes.
pub trait PathObserver {
    /// `local_times` holds every `L^x` at the end of the sojourn.
    fn sojourn(&mut self, state: usize, start: f64, duration: f64, local_times: &[f64]) -> ControlFlow<()>;
}

impl<F> PathObserver for F
where
    F: FnMut(usize, f64, f64, &[f64]) -> ControlFlow<()>,
{
    fn sojourn(&mut self, state: usize, start: f64, duration: f64, local_times: &[f64]) -> ControlFlow<()> {
        self(state, start, duration, local_times)
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl PathObserver for NoObserver {
    fn sojourn(&mut self, _: usize, _: f64, _: f64, _: &[f64]) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub end_state: usize,
    pub total_time: f64,
    pub jumps: u64,
    pub local_times: Vec<f64>,
    pub reason: TerminalReason,
}

/// Jump tables for one model, reusable across replicas.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    model: &'a MarkovModel,
    exit_rates: Vec<f64>,
    /// Per state: cumulative off-diagonal rates and targets.
    jumps: Vec<Vec<(f64, usize)>>,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a MarkovModel) -> Self {
        let n = model.len();
        let mut jumps = Vec::with_capacity(n);
        let mut exit_rates = Vec::with_capacity(n);
        for x in 0..n {
            let mut acc = 0.0;
            let mut row = Vec::new();
            for y in 0..n {
                let r = model.rate(x, y);
                if y != x && r > 0.0 {
                    acc += r;
                    row.push((acc, y));
                }
            }
            exit_rates.push(acc);
            jumps.push(row);
        }
        Simulator { model, exit_rates, jumps }
    }

    pub fn model(&self) -> &MarkovModel {
        self.model
    }

    fn next_state<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let row = &self.jumps[x];
        let u = rng.random::<f64>() * self.exit_rates[x];
        let idx = row.partition_point(|&(c, _)| c <= u);
        row[idx.min(row.len() - 1)].1
    }

    /// Runs the chain from `start` until `rule` fires, reporting sojourns to
    /// `observer`.
    pub fn run<R, O>(&self, start: usize, rule: &StopRule, rng: &mut R, observer: &mut O) -> Result<RunSummary>
    where
        R: Rng + ?Sized,
        O: PathObserver + ?Sized,
    {
        self.model.check_state(start)?;
        rule.validate(self.model)?;
        let m = self.model.invariant();
        let mut local = vec![0.0; self.model.len()];
        let mut state = start;
        let mut t = 0.0;
        let mut jumps = 0u64;

        let finish = |state, t, jumps, local, reason| RunSummary {
            end_state: state,
            total_time: t,
            jumps,
            local_times: local,
            reason,
        };

        loop {
            // Conditions that hold before any time elapses in `state`.
            match rule.kind {
                StopKind::Hitting(x) if state == x => {
                    return Ok(finish(state, t, jumps, local, TerminalReason::Hitting));
                }
                StopKind::FixedTime(horizon) if t >= horizon => {
                    return Ok(finish(state, t, jumps, local, TerminalReason::FixedTime));
                }
                StopKind::InverseLocalTime { state: a, level } if state == a && local[a] >= level => {
                    local[a] = level;
                    return Ok(finish(state, t, jumps, local, TerminalReason::InverseLocalTime));
                }
                StopKind::CappedInverseLocalTime { state: a, level, cap } => {
                    if state == a && local[a] >= level {
                        local[a] = level;
                        return Ok(finish(state, t, jumps, local, TerminalReason::InverseLocalTime));
                    }
                    if local[state] >= cap {
                        return Ok(finish(state, t, jumps, local, TerminalReason::LocalTimeCap));
                    }
                }
                _ => {}
            }

            let e: f64 = Exp1.sample(rng);
            let mut duration = e / self.exit_rates[state];
            let mut stop = None;
            match rule.kind {
                StopKind::FixedTime(horizon) => {
                    if t + duration >= horizon {
                        duration = horizon - t;
                        stop = Some(TerminalReason::FixedTime);
                    }
                }
                StopKind::InverseLocalTime { state: a, level } if state == a => {
                    let need = (level - local[a]) * m[a];
                    if duration >= need {
                        duration = need;
                        stop = Some(TerminalReason::InverseLocalTime);
                    }
                }
                StopKind::CappedInverseLocalTime { state: a, level, cap } => {
                    let to_cap = (cap - local[state]) * m[state];
                    let to_level = if state == a { (level - local[a]) * m[a] } else { f64::INFINITY };
                    if to_level <= to_cap && duration >= to_level {
                        duration = to_level;
                        stop = Some(TerminalReason::InverseLocalTime);
                    } else if duration >= to_cap {
                        duration = to_cap;
                        stop = Some(TerminalReason::LocalTimeCap);
                    }
                }
                _ => {}
            }

            local[state] += duration / m[state];
            match (stop, rule.kind) {
                (Some(TerminalReason::InverseLocalTime), StopKind::InverseLocalTime { state: a, level })
                | (Some(TerminalReason::InverseLocalTime), StopKind::CappedInverseLocalTime { state: a, level, .. }) => {
                    local[a] = level;
                }
                (Some(TerminalReason::LocalTimeCap), StopKind::CappedInverseLocalTime { cap, .. }) => {
                    local[state] = cap;
                }
                _ => {}
            }
            let start_time = t;
            t += duration;
            let flow = observer.sojourn(state, start_time, duration, &local);
            if let Some(reason) = stop {
                return Ok(finish(state, t, jumps, local, reason));
            }
            if flow.is_break() {
                return Ok(finish(state, t, jumps, local, TerminalReason::Observer));
            }

            jumps += 1;
            if jumps >= rule.budget {
                return Err(Error::BudgetExceeded { budget: rule.budget });
            }
            state = self.next_state(state, rng);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub state: usize,
    pub duration: f64,
}

/// A complete simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegmentLog {
    pub start: usize,
    pub segments: Vec<Segment>,
    pub end_state: usize,
    pub terminal_reason: TerminalReason,
    pub total_time: f64,
    /// Local times at the horizon; for inverse-local-time stops the target
    /// entry equals the requested level exactly.
    pub terminal_local_times: Vec<f64>,
    pub jumps: u64,
}

impl PathSegmentLog {
    /// Checks the structural invariants against `model`: every transition
    /// changes state with positive rate, and the sojourns sum to the horizon.
    pub fn is_consistent(&self, model: &MarkovModel) -> bool {
        let mut prev = None;
        let mut sum = 0.0;
        for seg in &self.segments {
            if let Some(p) = prev {
                if p == seg.state || !(model.rate(p, seg.state) > 0.0) {
                    return false;
                }
            }
            if !(seg.duration > 0.0) {
                return false;
            }
            sum += seg.duration;
            prev = Some(seg.state);
        }
        if let Some(first) = self.segments.first() {
            if first.state != self.start {
                return false;
            }
        }
        (sum - self.total_time).abs() <= 1e-12 * self.total_time.max(1.0)
    }

    /// Cumulative times at which each segment ends.
    pub fn segment_end_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                t += s.duration;
                t
            })
            .collect()
    }
}

pub fn simulate<R: Rng + ?Sized>(
    model: &MarkovModel,
    start: usize,
    rule: &StopRule,
    rng: &mut R,
) -> Result<PathSegmentLog> {
    let sim = Simulator::new(model);
    let mut segments = Vec::new();
    let mut record = |state: usize, _start: f64, duration: f64, _: &[f64]| {
        if duration > 0.0 {
            segments.push(Segment { state, duration });
        }
        ControlFlow::Continue(())
    };
    let summary = sim.run(start, rule, rng, &mut record)?;
    Ok(PathSegmentLog {
        start,
        segments,
        end_state: summary.end_state,
        terminal_reason: summary.reason,
        total_time: summary.total_time,
        terminal_local_times: summary.local_times,
        jumps: summary.jumps,
    })
}

/// Local times at a single instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeVector {
    pub t: f64,
    pub values: Vec<f64>,
}

impl LocalTimeVector {
    /// `|Σ_x L^x_t m(x) − t| / max(t, 1)`.
    pub fn partition_defect(&self, model: &MarkovModel) -> f64 {
        let occ: f64 = self.values.iter().zip(model.invariant()).map(|(l, m)| l * m).sum();
        (occ - self.t).abs() / self.t.max(1.0)
    }
}

/// `L^x_t`: occupation of `x` on `[0,t]` divided by `m(x)`.
pub fn local_time(path: &PathSegmentLog, model: &MarkovModel, x: usize, t: f64) -> Result<f64> {
    model.check_state(x)?;
    Ok(local_time_vector(path, model, t)?.values[x])
}

pub fn local_time_vector(path: &PathSegmentLog, model: &MarkovModel, t: f64) -> Result<LocalTimeVector> {
    if !(t >= 0.0) || t > path.total_time {
        return Err(Error::OutOfRange { t, horizon: path.total_time });
    }
    if t == path.total_time {
        return Ok(LocalTimeVector { t, values: path.terminal_local_times.clone() });
    }
    // Accumulated exactly as the simulator does, so values agree with the
    // terminal vector bit for bit and stay monotone in `t`.
    let m = model.invariant();
    let mut values = vec![0.0; model.len()];
    let mut clock = 0.0;
    for seg in &path.segments {
        if clock >= t {
            break;
        }
        let dt = seg.duration.min(t - clock);
        values[seg.state] += dt / m[seg.state];
        clock += seg.duration;
    }
    Ok(LocalTimeVector { t, values })
}

/// Local-time vectors at every segment end, i.e. at every time where some
/// `L^a − L^b` can attain a running extremum.
pub fn local_time_fields(path: &PathSegmentLog, model: &MarkovModel) -> Vec<LocalTimeVector> {
    let m = model.invariant();
    let mut local = vec![0.0; model.len()];
    let mut t = 0.0;
    let last = path.segments.len();
    let mut out = Vec::with_capacity(last);
    for (i, seg) in path.segments.iter().enumerate() {
        t += seg.duration;
        if i + 1 == last {
            local.clone_from(&path.terminal_local_times);
            t = path.total_time;
        } else {
            local[seg.state] += seg.duration / m[seg.state];
        }
        out.push(LocalTimeVector { t, values: local.clone() });
    }
    out
}

/// `∫_0^T e^{−αt} dL^y_t` along the path.
pub fn discounted_local_time(path: &PathSegmentLog, model: &MarkovModel, y: usize, alpha: f64) -> Result<f64> {
    model.check_state(y)?;
    let mut t = 0.0;
    let mut acc = 0.0;
    for seg in &path.segments {
        if seg.state == y {
            acc += (libm::exp(-alpha * t) - libm::exp(-alpha * (t + seg.duration))) / alpha;
        }
        t += seg.duration;
    }
    Ok(acc / model.invariant()[y])
}
