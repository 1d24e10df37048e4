//! Finite irreducible continuous-time Markov chains and their m-reversals.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Table};

const ROW_SUM_TOL: f64 = 1e-12;
const BALANCE_TOL: f64 = 1e-10;

/// Provenance of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    TwoState,
    BirthDeath,
    CycleWalk,
    JumpCycle,
    Custom,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 5] =
        [FamilyTag::TwoState, FamilyTag::BirthDeath, FamilyTag::CycleWalk, FamilyTag::JumpCycle, FamilyTag::Custom];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::TwoState => "two_state",
            FamilyTag::BirthDeath => "birth_death",
            FamilyTag::CycleWalk => "cycle_walk",
            FamilyTag::JumpCycle => "jump_cycle",
            FamilyTag::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Translation-invariant families on the cycle Z/N.
    pub fn is_cycle(self) -> bool {
        matches!(self, FamilyTag::CycleWalk | FamilyTag::JumpCycle)
    }
}

/// Parameters of a built-in model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `0 → 1` at rate `a`, `1 → 0` at rate `b`.
    TwoState { a: f64, b: f64 },
    /// Path `0..n`; `birth[i]` is the rate `i → i+1`, `death[i]` the rate `i+1 → i`.
    BirthDeath { birth: Vec<f64>, death: Vec<f64> },
    /// Nearest-neighbour walk on Z/n: `+1` at rate `p`, `−1` at rate `q`.
    CycleWalk { n: usize, p: f64, q: f64 },
    /// Walk on Z/n jumping `±k` at rate `scale · k^{-(1+exponent)}` where `k`
    /// is the cyclic distance of the jump.
    JumpCycle { n: usize, exponent: f64, scale: f64 },
    /// Explicit rate table; diagonal entries must make every row sum to zero.
    Custom { rates: Vec<Vec<f64>> },
}

impl Family {
    pub fn birth_death_uniform(n: usize, birth: f64, death: f64) -> Self {
        let len = n.saturating_sub(1);
        Family::BirthDeath { birth: vec![birth; len], death: vec![death; len] }
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            Family::TwoState { .. } => FamilyTag::TwoState,
            Family::BirthDeath { .. } => FamilyTag::BirthDeath,
            Family::CycleWalk { .. } => FamilyTag::CycleWalk,
            Family::JumpCycle { .. } => FamilyTag::JumpCycle,
            Family::Custom { .. } => FamilyTag::Custom,
        }
    }

    fn generator(&self) -> Result<Table> {
        match self {
            Family::TwoState { a, b } => {
                positive_rate("a", *a)?;
                positive_rate("b", *b)?;
                Ok(with_diagonal(Table::from_row_slice(2, 2, &[0.0, *a, *b, 0.0])))
            }
            Family::BirthDeath { birth, death } => {
                if birth.len() != death.len() {
                    return Err(Error::config("death", format!("expected {} rates, got {}", birth.len(), death.len())));
                }
                if birth.is_empty() {
                    return Err(Error::config("n", "need at least 2 states"));
                }
                let n = birth.len() + 1;
                let mut q = Table::zeros(n, n);
                for (i, (&up, &down)) in birth.iter().zip(death).enumerate() {
                    positive_rate("birth", up)?;
                    positive_rate("death", down)?;
                    q[(i, i + 1)] = up;
                    q[(i + 1, i)] = down;
                }
                Ok(with_diagonal(q))
            }
            Family::CycleWalk { n, p, q } => {
                if *n < 3 {
                    return Err(Error::config("n", "cycle walk needs at least 3 states"));
                }
                positive_rate("p", *p)?;
                positive_rate("q", *q)?;
                let n = *n;
                let mut g = Table::zeros(n, n);
                for i in 0..n {
                    g[(i, (i + 1) % n)] += p;
                    g[(i, (i + n - 1) % n)] += q;
                }
                Ok(with_diagonal(g))
            }
            Family::JumpCycle { n, exponent, scale } => {
                if *n < 2 {
                    return Err(Error::config("n", "need at least 2 states"));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::config("exponent", "must be finite and > 0"));
                }
                positive_rate("scale", *scale)?;
                let n = *n;
                let mut g = Table::zeros(n, n);
                for i in 0..n {
                    for k in 1..n {
                        let dist = k.min(n - k) as f64;
                        g[(i, (i + k) % n)] = scale * libm::pow(dist, -(1.0 + exponent));
                    }
                }
                Ok(with_diagonal(g))
            }
            Family::Custom { rates } => {
                let n = rates.len();
                if n < 2 {
                    return Err(Error::config("rates", "need at least 2 states"));
                }
                let mut g = Table::zeros(n, n);
                for (i, row) in rates.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::config("rates", format!("row {i} has {} entries, expected {n}", row.len())));
                    }
                    for (j, &r) in row.iter().enumerate() {
                        if !r.is_finite() {
                            return Err(Error::config("rates", format!("entry ({i},{j}) is not finite")));
                        }
                        if i != j && r < 0.0 {
                            return Err(Error::config(
                                "rates",
                                format!("off-diagonal entry ({i},{j}) = {r} is negative"),
                            ));
                        }
                        g[(i, j)] = r;
                    }
                }
                Ok(g)
            }
        }
    }
}

fn positive_rate(field: &str, r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("rate must be finite and > 0, got {r}")))
    }
}

fn with_diagonal(mut q: Table) -> Table {
    for i in 0..q.nrows() {
        q[(i, i)] = 0.0;
        let out: f64 = q.row(i).iter().sum();
        q[(i, i)] = -out;
    }
    q
}

/// A validated irreducible generator together with its invariant
/// probability measure `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    labels: Vec<String>,
    generator: Table,
    invariant: Vec<f64>,
    family: FamilyTag,
}

impl MarkovModel {
    pub fn build(family: &Family) -> Result<Self> {
        let q = family.generator()?;
        Self::from_generator(q, family.tag())
    }

    pub fn from_generator(generator: Table, family: FamilyTag) -> Result<Self> {
        validate_generator(&generator)?;
        check_irreducible(&generator)?;
        let m = linalg::stationary_distribution(&generator)?;
        let total: f64 = m.iter().sum();
        let invariant: Vec<f64> = m.iter().map(|v| v / total).collect();
        if let Some(i) = invariant.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::config("rates", format!("invariant measure has non-positive entry at state {i}")));
        }
        let n = generator.nrows();
        let model = MarkovModel { labels: (0..n).map(|i| i.to_string()).collect(), generator, invariant, family };
        let balance = model.balance_residual();
        if balance > BALANCE_TOL {
            return Err(Error::config(
                "rates",
                format!("invariant measure residual {balance:e} exceeds {BALANCE_TOL:e}"),
            ));
        }
        Ok(model)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::config("labels", format!("expected {} labels, got {}", self.len(), labels.len())));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.invariant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.invariant.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn generator(&self) -> &Table {
        &self.generator
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.generator[(x, y)]
    }

    /// Total jump rate `−Q(x,x)`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        -self.generator[(x, x)]
    }

    pub fn invariant(&self) -> &[f64] {
        &self.invariant
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn check_state(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidState(x))
        }
    }

    /// `max_y |(m·Q)(y)|`.
    pub fn balance_residual(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|y| (0..n).map(|x| self.invariant[x] * self.generator[(x, y)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// The m-reversal: `Q̂(x,y) = m(y) Q(y,x) / m(x)`, sharing the invariant
    /// measure.
    pub fn dual(&self) -> MarkovModel {
        let n = self.len();
        let m = &self.invariant;
        let mut q = Table::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    q[(x, y)] = m[y] * self.generator[(y, x)] / m[x];
                }
            }
        }
        for x in 0..n {
            q[(x, x)] = self.generator[(x, x)];
        }
        MarkovModel {
            labels: self.labels.clone(),
            generator: q,
            invariant: self.invariant.clone(),
            family: self.family,
        }
    }

    /// `max |m(x)Q(x,y) − m(y)Q(y,x)|` over pairs.
    pub fn reversibility_violation(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in (x + 1)..n {
                let flux = self.invariant[x] * self.generator[(x, y)] - self.invariant[y] * self.generator[(y, x)];
                worst = worst.max(flux.abs());
            }
        }
        worst
    }

    pub fn is_reversible(&self, tol: f64) -> bool {
        self.reversibility_violation() <= tol
    }
}

pub fn validate_generator(q: &Table) -> Result<()> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::config("rates", "generator must be square"));
    }
    if n < 2 {
        return Err(Error::config("rates", "need at least 2 states"));
    }
    for i in 0..n {
        let mut sum = 0.0;
        let mut scale = 0.0f64;
        for j in 0..n {
            let v = q[(i, j)];
            if !v.is_finite() {
                return Err(Error::config("rates", format!("entry ({i},{j}) is not finite")));
            }
            if i != j && v < 0.0 {
                return Err(Error::config("rates", format!("off-diagonal entry ({i},{j}) = {v} is negative")));
            }
            sum += v;
            scale = scale.max(v.abs());
        }
        if sum.abs() > ROW_SUM_TOL * scale.max(1.0) {
            return Err(Error::config("rates", format!("row {i} sums to {sum}, expected 0")));
        }
    }
    Ok(())
}

fn check_irreducible(q: &Table) -> Result<()> {
    let n = q.nrows();
    for transpose in [false, true] {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                let r = if transpose { q[(y, x)] } else { q[(x, y)] };
                if x != y && r > 0.0 && !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(if transpose {
                Error::NonIrreducible { from: missing, unreachable: 0 }
            } else {
                Error::NonIrreducible { from: 0, unreachable: missing }
            });
        }
    }
    Ok(())
}
