//! Summary statistics and goodness-of-fit tests used by the Monte Carlo
//! experiments.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

/// Two-sided acceptance band for Monte Carlo comparisons, in standard errors.
pub const Z_ACCEPT: f64 = 3.0;
/// Upper 1% point of the standard normal.
pub const Z_ONE_SIDED_99: f64 = 2.326_347_874_040_841;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanEstimate { mean: f64::NAN, se: f64::NAN, count: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            libm::sqrt(var / n as f64)
        } else {
            f64::INFINITY
        };
        MeanEstimate { mean, se, count: n }
    }

    /// Standardized distance to `target`; exact agreement with zero spread
    /// gives 0.
    pub fn z_score(&self, target: f64) -> f64 {
        z_score(self.mean, target, self.se)
    }

    pub fn within(&self, target: f64, band: f64) -> bool {
        self.z_score(target).abs() <= band
    }
}

pub fn z_score(estimate: f64, target: f64, se: f64) -> f64 {
    let diff = estimate - target;
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY.copysign(diff)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Sample variance with the standard error of that estimate,
/// `sqrt((m4 − s⁴)/n)`.
pub fn variance_estimate(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = variance(xs);
    let m4 = xs.iter().map(|x| libm::pow(x - m, 4.0)).sum::<f64>() / n;
    (s2, libm::sqrt(((m4 - s2 * s2) / n).max(0.0)))
}

/// Proportion estimate `k/n` with binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub hits: usize,
    pub trials: usize,
}

impl Proportion {
    pub fn estimate(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    pub fn se(&self) -> f64 {
        let p = self.estimate();
        libm::sqrt(p * (1.0 - p) / self.trials as f64)
    }

    /// One-sided normal lower bound; clamps at 0.
    pub fn lower_bound(&self, z: f64) -> f64 {
        (self.estimate() - z * self.se()).max(0.0)
    }

    /// One-sided upper bound. With no hits the normal interval degenerates,
    /// so the exact binomial bound `1 − level^{1/n}` is used instead.
    pub fn upper_bound(&self, z: f64) -> f64 {
        if self.hits == 0 {
            let tail = normal_sf(z);
            1.0 - libm::pow(tail, 1.0 / self.trials as f64)
        } else {
            (self.estimate() + z * self.se()).min(1.0)
        }
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`normal_cdf`] (Acklam's rational approximation refined by
/// one Halley step).
pub fn normal_quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p <= 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    let low = 0.024_25;
    let x = if p < low {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * libm::sqrt(2.0 * PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi-transformed series converges fast for small λ.
        let mut cdf = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            cdf += libm::exp(-j * j * PI * PI / (8.0 * lambda * lambda));
        }
        (1.0 - libm::sqrt(2.0 * PI) / lambda * cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = libm::exp(-2.0 * kf * kf * lambda * lambda);
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

fn stephens_scale(n_eff: f64) -> f64 {
    let r = libm::sqrt(n_eff);
    r + 0.12 + 0.11 / r
}

/// Kolmogorov–Smirnov statistic with its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size (`n`, or `n₁n₂/(n₁+n₂)` for two samples).
    pub n_eff: f64,
}

impl KsResult {
    fn new(statistic: f64, n_eff: f64) -> Self {
        KsResult { statistic, p_value: kolmogorov_sf(stephens_scale(n_eff) * statistic), n_eff }
    }

    /// Statistic below which the test accepts at level `alpha`.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        ks_critical_value(self.n_eff, alpha)
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

pub fn ks_critical_value(n_eff: f64, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / stephens_scale(n_eff)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    KsResult::new(d, n)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let va = sorted(a);
    let vb = sorted(b);
    let (na, nb) = (va.len(), vb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = va[i].min(vb[j]);
        while i < na && va[i] <= x {
            i += 1;
        }
        while j < nb && vb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let n_eff = (na * nb) as f64 / (na + nb) as f64;
    KsResult::new(d, n_eff)
}

/// Empirical `q`-quantile (nearest rank on the sorted sample).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let v = sorted(xs);
    if v.is_empty() {
        return f64::NAN;
    }
    let idx = libm::ceil(q * v.len() as f64).max(1.0) as usize - 1;
    v[idx.min(v.len() - 1)]
}
