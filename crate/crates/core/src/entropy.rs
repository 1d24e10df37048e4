//! Entropy functionals on finite subsets of the intrinsic metric space.
//!
//! Balls are closed: `B(z,v) = {y : d(z,y) ≤ v}`. On a finite space the
//! integrand `v ↦ sqrt(ln 1/μ(B(z,v)))` is a right-continuous step function
//! whose jumps sit at the distinct distances from `z`, so every entropy
//! integral is computed as an exact finite sum.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Table;
use crate::model::MarkovModel;
use crate::potential::{IntrinsicMetric, NEGATIVE_SQUARE_TOL};
use crate::sim::LocalTimeVector;

/// Constant of the modulus-of-continuity bound.
pub const MODULUS_CONSTANT: f64 = 80.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    pub points: Vec<usize>,
    pub dist: Table,
    pub diameter: f64,
}

impl FiniteMetricSpace {
    pub fn new(points: Vec<usize>, dist: Table) -> Result<Self> {
        let k = points.len();
        if dist.nrows() != k || dist.ncols() != k {
            return Err(Error::Config { field: "dist".into(), message: "shape does not match points".into() });
        }
        for i in 0..k {
            if dist[(i, i)].abs() > NEGATIVE_SQUARE_TOL {
                return Err(Error::Config { field: "dist".into(), message: "nonzero diagonal".into() });
            }
            for j in 0..k {
                let d = dist[(i, j)];
                if !(d >= 0.0) || (d - dist[(j, i)]).abs() > NEGATIVE_SQUARE_TOL {
                    return Err(Error::Config {
                        field: "dist".into(),
                        message: alloc::format!("entry ({i},{j}) breaks nonnegativity or symmetry"),
                    });
                }
            }
        }
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        Ok(FiniteMetricSpace { points, dist, diameter })
    }

    /// Restriction of the intrinsic metric to `points` (all states when
    /// `None`).
    pub fn from_metric(metric: &IntrinsicMetric, points: Option<&[usize]>) -> Result<Self> {
        let n = metric.len();
        let points: Vec<usize> = match points {
            Some(p) => p.to_vec(),
            None => (0..n).collect(),
        };
        if let Some(&bad) = points.iter().find(|&&p| p >= n) {
            return Err(Error::InvalidState(bad));
        }
        let dist = Table::from_fn(points.len(), points.len(), |i, j| metric.d[(points[i], points[j])]);
        Self::new(points, dist)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, state: usize) -> Result<usize> {
        self.points.iter().position(|&p| p == state).ok_or(Error::InvalidState(state))
    }

    /// Sorted distinct distances, including 0.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.dist.iter().copied().collect();
        v.push(0.0);
        sort_dedup(&mut v);
        v
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMeasure {
    pub weights: Vec<f64>,
}

impl WeightMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config {
                field: "weights".into(),
                message: alloc::format!("weights must be nonnegative and sum to 1 (sum {total})"),
            });
        }
        Ok(WeightMeasure { weights })
    }

    fn normalized(mut weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        WeightMeasure { weights }
    }

    pub fn min_atom(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn uniform_weights(space: &FiniteMetricSpace) -> WeightMeasure {
    let k = space.len().max(1);
    WeightMeasure { weights: alloc::vec![1.0 / k as f64; space.len()] }
}

/// `μ(B(z,v))` for the closed ball around state `z`.
pub fn ball_mass(space: &FiniteMetricSpace, mu: &WeightMeasure, z: usize, v: f64) -> Result<f64> {
    let i = space.index_of(z)?;
    Ok(closed_ball(space, mu, i, v))
}

fn closed_ball(space: &FiniteMetricSpace, mu: &WeightMeasure, i: usize, v: f64) -> f64 {
    (0..space.len()).filter(|&j| space.dist[(i, j)] <= v).map(|j| mu.weights[j]).sum::<f64>().min(1.0)
}

fn log_height(mass: f64) -> f64 {
    if mass <= 0.0 {
        f64::INFINITY
    } else {
        libm::sqrt(libm::log(1.0 / mass).max(0.0))
    }
}

/// Step data of one point's integrand: `(v_j, height_j)` with the height
/// valid on `[v_j, v_{j+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSteps {
    pub state: usize,
    pub steps: Vec<(f64, f64)>,
}

impl PointSteps {
    fn build(space: &FiniteMetricSpace, mu: &WeightMeasure, i: usize) -> Self {
        let mut radii: Vec<f64> = (0..space.len()).map(|j| space.dist[(i, j)]).collect();
        radii.push(0.0);
        sort_dedup(&mut radii);
        let steps = radii.iter().map(|&r| (r, log_height(closed_ball(space, mu, i, r)))).collect();
        PointSteps { state: space.points[i], steps }
    }

    /// `∫_0^δ sqrt(ln 1/μ(B(z,v))) dv`.
    pub fn integral(&self, delta: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &(start, height)) in self.steps.iter().enumerate() {
            if start >= delta {
                break;
            }
            let end = self.steps.get(k + 1).map_or(f64::INFINITY, |s| s.0).min(delta);
            let len = end - start;
            if len > 0.0 && height > 0.0 {
                acc += len * height;
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyPoint {
    pub delta: f64,
    pub eta: f64,
    /// State attaining the supremum.
    pub argmax: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyProfile {
    pub diameter: f64,
    /// Sorted distinct distances of the space.
    pub breakpoints: Vec<f64>,
    pub at_breakpoints: Vec<EntropyPoint>,
    pub grid: Vec<EntropyPoint>,
    pub per_point: Vec<PointSteps>,
}

impl EntropyProfile {
    /// `η_K(δ) = max_z ∫_0^δ sqrt(ln 1/μ(B(z,v))) dv`.
    pub fn eta(&self, delta: f64) -> f64 {
        self.eta_with_argmax(delta).eta
    }

    pub fn eta_with_argmax(&self, delta: f64) -> EntropyPoint {
        let mut best = EntropyPoint { delta, eta: 0.0, argmax: self.per_point.first().map_or(0, |p| p.state) };
        for p in &self.per_point {
            let v = p.integral(delta);
            if v > best.eta {
                best = EntropyPoint { delta, eta: v, argmax: p.state };
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.eta(self.diameter.max(1.0)).is_finite()
    }
}

/// Exact entropy profile. Errors with [`Error::UnsupportedMeasure`] when `μ`
/// misses a point unless `allow_infinite` is set, in which case the
/// affected values are `+∞`.
pub fn entropy_profile(
    space: &FiniteMetricSpace,
    mu: &WeightMeasure,
    delta_grid: &[f64],
    allow_infinite: bool,
) -> Result<EntropyProfile> {
    if mu.weights.len() != space.len() {
        return Err(Error::Config { field: "weights".into(), message: "length does not match the space".into() });
    }
    if !allow_infinite {
        if let Some(i) = mu.weights.iter().position(|&w| w <= 0.0) {
            return Err(Error::UnsupportedMeasure(space.points[i]));
        }
    }
    let per_point: Vec<PointSteps> = (0..space.len()).map(|i| PointSteps::build(space, mu, i)).collect();
    let mut profile = EntropyProfile {
        diameter: space.diameter,
        breakpoints: space.breakpoints(),
        at_breakpoints: Vec::new(),
        grid: Vec::new(),
        per_point,
    };
    profile.at_breakpoints = profile.breakpoints.iter().map(|&d| profile.eta_with_argmax(d)).collect();
    profile.grid = delta_grid.iter().map(|&d| profile.eta_with_argmax(d)).collect();
    Ok(profile)
}

/// `η_K(D)` for the given weights.
pub fn eta_at_diameter(space: &FiniteMetricSpace, mu: &WeightMeasure) -> f64 {
    (0..space.len()).map(|i| PointSteps::build(space, mu, i).integral(space.diameter)).fold(0.0, f64::max)
}

/// Coordinate-wise multiplicative search for weights with small `η_K(D)`,
/// starting from the uniform measure.
pub fn optimize_weights(space: &FiniteMetricSpace, iters: usize) -> WeightMeasure {
    optimize_weights_from(space, &uniform_weights(space), iters)
}

/// As [`optimize_weights`] but from an arbitrary full-support start; only
/// improving moves are accepted, so `η_K(D)` never increases.
pub fn optimize_weights_from(space: &FiniteMetricSpace, start: &WeightMeasure, iters: usize) -> WeightMeasure {
    let k = space.len();
    if k <= 1 {
        return WeightMeasure { weights: alloc::vec![1.0; k] };
    }
    let mut best = start.clone();
    let mut best_eta = eta_at_diameter(space, &best);
    let mut factor = 2.0f64;
    for _ in 0..iters {
        let mut improved = false;
        for i in 0..k {
            for f in [factor, 1.0 / factor] {
                let mut w = best.weights.clone();
                w[i] *= f;
                let candidate = WeightMeasure::normalized(w);
                let eta = eta_at_diameter(space, &candidate);
                if eta < best_eta {
                    best = candidate;
                    best_eta = eta;
                    improved = true;
                }
            }
        }
        if !improved {
            factor = libm::sqrt(factor);
            if factor < 1.0 + 1e-9 {
                break;
            }
        }
    }
    best
}

/// Monotone rearrangement of `k ↦ h(0,k)` for a translation-invariant
/// model on Z/N, with counting measure / N standing in for Lebesgue measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementProfile {
    pub base: usize,
    /// `h(base, base+k)` for `k = 0..N`.
    pub h_profile: Vec<f64>,
    /// `h_profile` sorted ascending.
    pub sorted: Vec<f64>,
    pub eps_low: f64,
    pub eps_up: f64,
    pub x_up: f64,
    pub fernique: f64,
    pub barlow: f64,
}

impl RearrangementProfile {
    fn from_profile(base: usize, h_profile: Vec<f64>, eps_low: f64) -> Self {
        let mut sorted = h_profile.clone();
        sorted.sort_by(f64::total_cmp);
        let eps_up = sorted.last().copied().unwrap_or(0.0);
        let mut r =
            RearrangementProfile { base, h_profile, sorted, eps_low, eps_up, x_up: 1.0, fernique: 0.0, barlow: 0.0 };
        r.fernique = r.fernique_integral(eps_low, eps_up);
        r.barlow = r.barlow_integral(eps_low, r.x_up);
        r
    }

    fn len(&self) -> f64 {
        self.sorted.len() as f64
    }

    /// `m(y) = |{k : h(k) < y}| / N`.
    pub fn m_of_y(&self, y: f64) -> f64 {
        self.sorted.partition_point(|&h| h < y) as f64 / self.len()
    }

    /// `h̄(x) = inf{y : m(y) > x}`; equals the `(⌊xN⌋+1)`-th smallest
    /// profile value for `x ∈ [0,1)` and `+∞` beyond.
    pub fn h_bar(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        // Largest k with k/N ≤ x, immune to rounding in x·N.
        let n = self.sorted.len();
        let mut count = libm::floor(x * self.len()).min(n as f64) as usize;
        while count < n && (count + 1) as f64 / self.len() <= x {
            count += 1;
        }
        while count > 0 && count as f64 / self.len() > x {
            count -= 1;
        }
        self.sorted.get(count).copied().unwrap_or(f64::INFINITY)
    }

    /// `∫_{lo}^{hi} sqrt(max(0, ln 1/m(ε))) dε`, exact over the steps of `m`.
    pub fn fernique_integral(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let mut cuts: Vec<f64> = self.sorted.iter().copied().filter(|&v| v > lo && v < hi).collect();
        cuts.insert(0, lo);
        cuts.push(hi);
        sort_dedup(&mut cuts);
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            // `m` is left-continuous; on (w0, w1] it equals m just above w0.
            let mass = self.sorted.partition_point(|&h| h <= w[0]) as f64 / self.len();
            acc += (w[1] - w[0]) * log_height(mass);
        }
        acc
    }

    /// `∫_{lo}^{hi} h̄(x) / (x sqrt(ln 1/x)) dx` for `0 < lo < hi ≤ 1`, using
    /// the antiderivative `−2 sqrt(ln 1/x)` on each step of `h̄`.
    pub fn barlow_integral(&self, lo: f64, hi: f64) -> f64 {
        let hi = hi.min(1.0);
        if !(hi > lo && lo > 0.0) {
            return 0.0;
        }
        let n = self.sorted.len();
        let root_log = |x: f64| libm::sqrt(libm::log(1.0 / x).max(0.0));
        let mut acc = 0.0;
        for k in 0..n {
            let a = (k as f64 / n as f64).max(lo);
            let b = ((k + 1) as f64 / n as f64).min(hi);
            if b > a && self.sorted[k] > 0.0 {
                acc += self.sorted[k] * 2.0 * (root_log(a) - root_log(b));
            }
        }
        acc
    }

    /// Largest violation of `h̄(m(y)⁻) ≤ y ≤ h̄(m(y))` over the breakpoints
    /// and their midpoints.
    pub fn round_trip_violation(&self) -> f64 {
        let mut probes: Vec<f64> = self.sorted.clone();
        for w in self.sorted.windows(2) {
            probes.push(0.5 * (w[0] + w[1]));
        }
        if let Some(&last) = self.sorted.last() {
            probes.push(last + 1.0);
        }
        let step = 1.0 / self.len();
        let mut worst = 0.0f64;
        for y in probes {
            let m = self.m_of_y(y);
            let upper = self.h_bar(m);
            worst = worst.max(y - upper);
            if m > 0.0 {
                // Left limit of h̄ at m: the value on the previous step.
                let lower = self.h_bar(m - 0.5 * step);
                worst = worst.max(lower - y);
            }
        }
        worst.max(0.0)
    }
}

/// Maximum of `|h(0,k) − h(j,j+k)|` over `j, k`.
pub fn translation_invariance_violation(h: &Table) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            worst = worst.max((h[(0, k)] - h[(j, (j + k) % n)]).abs());
        }
    }
    worst
}

pub fn monotone_rearrangement(
    model: &MarkovModel,
    metric: &IntrinsicMetric,
    base: usize,
    eps_low: Option<f64>,
) -> Result<RearrangementProfile> {
    model.check_state(base)?;
    let violation = translation_invariance_violation(&metric.h);
    if !model.family().is_cycle() || violation > 1e-9 {
        return Err(Error::NotTranslationInvariant { violation });
    }
    let n = model.len();
    let profile: Vec<f64> = (0..n).map(|k| metric.h[(base, (base + k) % n)]).collect();
    let eps_low = eps_low.unwrap_or(1e-6 * metric.diameter());
    Ok(RearrangementProfile::from_profile(base, profile, eps_low))
}

/// Rearrangement of an explicit profile, e.g. the degenerate `h ≡ 0`.
pub fn rearrangement_of_profile(h_profile: Vec<f64>, eps_low: f64) -> RearrangementProfile {
    RearrangementProfile::from_profile(0, h_profile, eps_low)
}

/// Per-replica ratio of the observed modulus to the continuity bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusSample {
    /// `max_{a≠b, s≤t} |L^a_s − L^b_s| / η_K(d(a,b))`.
    pub r: f64,
    /// `C₀ (max_x L^x_t)^{1/2}`.
    pub bound: f64,
}

impl ModulusSample {
    pub fn ratio(&self) -> f64 {
        if self.r == 0.0 {
            0.0
        } else {
            self.r / self.bound
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusReport {
    pub constant: f64,
    pub samples: Vec<ModulusSample>,
    pub pass_rate: f64,
    pub quantiles: Vec<(f64, f64)>,
}

pub const MODULUS_QUANTILES: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 1.0];

/// Modulus ratio of one replica. `fields` are local-time vectors at
/// increasing times ending at `t`, restricted to states in `space`.
pub fn modulus_sample(
    fields: &[LocalTimeVector],
    space: &FiniteMetricSpace,
    profile: &EntropyProfile,
    constant: f64,
) -> Result<ModulusSample> {
    let last = fields.last().ok_or(Error::InsufficientData { have: 0, need: 1 })?;
    let k = space.len();
    let mut eta = Table::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            if i != j {
                eta[(i, j)] = profile.eta(space.dist[(i, j)]);
            }
        }
    }
    let mut r = 0.0f64;
    for f in fields {
        for i in 0..k {
            for j in (i + 1)..k {
                let diff = (f.values[space.points[i]] - f.values[space.points[j]]).abs();
                if diff > 0.0 {
                    r = r.max(diff / eta[(i, j)]);
                }
            }
        }
    }
    let sup = space.points.iter().map(|&x| last.values[x]).fold(0.0, f64::max);
    Ok(ModulusSample { r, bound: constant * libm::sqrt(sup) })
}

pub fn modulus_profile(
    replicas: &[Vec<LocalTimeVector>],
    space: &FiniteMetricSpace,
    profile: &EntropyProfile,
    constant: f64,
) -> Result<ModulusReport> {
    if replicas.is_empty() {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    let samples =
        replicas.iter().map(|fields| modulus_sample(fields, space, profile, constant)).collect::<Result<Vec<_>>>()?;
    Ok(summarize_modulus(samples, constant))
}

pub fn summarize_modulus(samples: Vec<ModulusSample>, constant: f64) -> ModulusReport {
    let ratios: Vec<f64> = samples.iter().map(|s| s.ratio()).collect();
    let pass = ratios.iter().filter(|&&r| r <= 1.0).count();
    let quantiles = MODULUS_QUANTILES.iter().map(|&q| (q, crate::stats::quantile(&ratios, q))).collect();
    ModulusReport { constant, pass_rate: pass as f64 / ratios.len().max(1) as f64, samples, quantiles }
}
