//! Parameter resolution and execution of the eleven experiments.

use loctime_core::clt::{self, CltSample, Verdict};
use loctime_core::entropy::{
    ball_mass, entropy_profile, eta_at_diameter, modulus_sample, monotone_rearrangement, optimize_weights,
    summarize_modulus, uniform_weights, EntropyProfile, FiniteMetricSpace, WeightMeasure,
};
use loctime_core::excursion::{excursion_functionals, excursions, ExcursionSet};
use loctime_core::gaussian::{build_sampler_default, isomorphism_experiment, sample_field, REVERSIBILITY_TOL};
use loctime_core::model::MarkovModel;
use loctime_core::potential::{
    check_duality_identities, covariance_kernel, hitting_moment_table, intrinsic_metric, killed_densities,
    resolvent_densities, resolvent_identity_residual, CovarianceKernel, IntrinsicMetric,
};
use loctime_core::runner::{replica_seed, ReplicaRunner};
use loctime_core::sim::{discounted_local_time, local_time_fields, simulate, StopRule, DEFAULT_BUDGET};
use loctime_core::stats::{MeanEstimate, Z_ACCEPT};
use loctime_core::subordinator::{strong_markov_check, subordinator_experiment, tail_bound_experiment};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig, Params};
use crate::error::RunError;
use crate::report::{format_float, Check, ExperimentOutput, Table};
use crate::row;

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum Plan {
    Identities {
        tolerance: f64,
        alphas: Vec<f64>,
    },
    Potentials {
        alphas: Vec<f64>,
        reps: usize,
        band: f64,
        tolerance: f64,
        budget: u64,
    },
    Metric {
        reps: usize,
        band: f64,
        tolerance: f64,
    },
    Entropy {
        states: Vec<usize>,
        weights: Option<Vec<f64>>,
        delta_grid: Vec<f64>,
        optimize_iters: usize,
        riemann_cells: usize,
        tolerance: f64,
    },
    Rearrangement {
        eps_low: f64,
        eps_grid: Vec<f64>,
        size_grid: Vec<usize>,
    },
    Excursions {
        level: f64,
        blocks: usize,
        band: f64,
        budget: u64,
    },
    Tailbound {
        a: usize,
        b: usize,
        x_grid: Vec<f64>,
        y_grid: Vec<f64>,
        reps: usize,
    },
    Subordinator {
        a: usize,
        b: usize,
        lambda_grid: Vec<f64>,
        t: f64,
        reps: usize,
        ks_alpha: f64,
        band: f64,
    },
    Clt {
        n_schedule: Vec<f64>,
        reps: usize,
        ks_alpha: f64,
        probes: Vec<Vec<f64>>,
        eta0: f64,
        delta_grid: Vec<f64>,
        lambda_grid: Vec<f64>,
        tightness_min_n: f64,
    },
    Isomorphism {
        n: f64,
        reps: usize,
        ks_alpha: f64,
        band: f64,
    },
    Modulus {
        t: f64,
        reps: usize,
        constant: f64,
        min_pass_rate: f64,
        states: Vec<usize>,
        budget: u64,
    },
}

fn positive(field: &str, v: f64) -> Result<f64, RunError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(RunError::config(&format!("params.{field}"), format!("must be finite and > 0, got {v}")))
    }
}

fn positive_grid(field: &str, grid: Vec<f64>) -> Result<Vec<f64>, RunError> {
    if grid.is_empty() {
        return Err(RunError::config(&format!("params.{field}"), "must not be empty"));
    }
    for &v in &grid {
        positive(field, v)?;
    }
    Ok(grid)
}

fn probability(field: &str, v: f64) -> Result<f64, RunError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(RunError::config(&format!("params.{field}"), format!("must lie in (0, 1), got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<usize, RunError> {
    if v >= min {
        Ok(v)
    } else {
        Err(RunError::config(&format!("params.{field}"), format!("must be at least {min}, got {v}")))
    }
}

fn state(model: &MarkovModel, field: &str, x: usize) -> Result<usize, RunError> {
    if x < model.len() {
        Ok(x)
    } else {
        Err(RunError::config(field, format!("state {x} out of range for {} states", model.len())))
    }
}

fn pair(model: &MarkovModel, base: usize, p: &Params) -> Result<(usize, usize), RunError> {
    let a = state(model, "params.a", p.a.unwrap_or(base))?;
    let b = state(model, "params.b", p.b.unwrap_or((a + 1) % model.len()))?;
    if a == b {
        return Err(RunError::config("params.b", "a and b must differ"));
    }
    Ok((a, b))
}

fn states(model: &MarkovModel, p: &Params) -> Result<Vec<usize>, RunError> {
    let s = p.states.clone().unwrap_or_else(|| (0..model.len()).collect());
    if s.len() < 2 {
        return Err(RunError::config("params.states", "need at least two states"));
    }
    for &x in &s {
        state(model, "params.states", x)?;
    }
    Ok(s)
}

/// Static checks and defaults; no simulation happens here.
pub fn plan(cfg: &ExperimentConfig, model: &MarkovModel) -> Result<Plan, RunError> {
    state(model, "base", cfg.base)?;
    if cfg.workers == 0 {
        return Err(RunError::config("workers", "must be at least 1"));
    }
    let p = &cfg.params;
    let band = Z_ACCEPT;
    let budget = p.budget.unwrap_or(DEFAULT_BUDGET);
    if budget == 0 {
        return Err(RunError::config("params.budget", "must be at least 1"));
    }
    let ks_alpha = probability("ks_alpha", p.ks_alpha.unwrap_or(0.05))?;
    Ok(match cfg.experiment {
        Experiment::Identities => Plan::Identities {
            tolerance: positive("tolerance", p.tolerance.unwrap_or(1e-8))?,
            alphas: positive_grid("alphas", p.alphas.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0]))?,
        },
        Experiment::Potentials => Plan::Potentials {
            alphas: positive_grid("alphas", p.alphas.clone().unwrap_or_else(|| vec![1.0]))?,
            reps: p.reps.unwrap_or(10_000),
            band,
            tolerance: positive("tolerance", p.tolerance.unwrap_or(1e-9))?,
            budget,
        },
        Experiment::Metric => Plan::Metric {
            reps: p.reps.unwrap_or(10_000),
            band,
            tolerance: positive("tolerance", p.tolerance.unwrap_or(1e-10))?,
        },
        Experiment::Entropy => {
            let s = states(model, p)?;
            if let Some(w) = &p.weights {
                if w.len() != s.len() {
                    return Err(RunError::config("params.weights", format!("expected {} weights", s.len())));
                }
                WeightMeasure::new(w.clone()).map_err(|e| RunError::prefixed(e, "params"))?;
            }
            Plan::Entropy {
                states: s,
                weights: p.weights.clone(),
                delta_grid: match &p.delta_grid {
                    Some(g) => positive_grid("delta_grid", g.clone())?,
                    None => Vec::new(),
                },
                optimize_iters: p.optimize_iters.unwrap_or(50),
                riemann_cells: at_least("riemann_cells", p.riemann_cells.unwrap_or(10_000), 10)?,
                tolerance: positive("tolerance", p.tolerance.unwrap_or(1e-3))?,
            }
        }
        Experiment::Rearrangement => {
            if !model.family().is_cycle() {
                return Err(RunError::config(
                    "model.family",
                    "rearrangement needs a cycle family (cycle_walk or jump_cycle)",
                ));
            }
            let size_grid = p.size_grid.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);
            for &n in &size_grid {
                at_least("size_grid", n, 3)?;
            }
            Plan::Rearrangement {
                eps_low: positive("eps_low", p.eps_low.unwrap_or(1e-6))?,
                eps_grid: positive_grid("eps_grid", p.eps_grid.clone().unwrap_or_else(|| vec![1e-2, 1e-4, 1e-6]))?,
                size_grid,
            }
        }
        Experiment::Excursions => Plan::Excursions {
            level: positive("level", p.level.unwrap_or(1e5))?,
            blocks: at_least("blocks", p.blocks.unwrap_or(16), 1)?,
            band,
            budget,
        },
        Experiment::Tailbound => {
            let (a, b) = pair(model, cfg.base, p)?;
            Plan::Tailbound {
                a,
                b,
                x_grid: positive_grid("x_grid", p.x_grid.clone().unwrap_or_else(|| vec![1.0, 2.0, 3.0]))?,
                y_grid: positive_grid("y_grid", p.y_grid.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]))?,
                reps: at_least("reps", p.reps.unwrap_or(100_000), 1)?,
            }
        }
        Experiment::Subordinator => {
            let (a, b) = pair(model, cfg.base, p)?;
            Plan::Subordinator {
                a,
                b,
                lambda_grid: positive_grid(
                    "lambda_grid",
                    p.lambda_grid.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0, 4.0]),
                )?,
                t: positive("t", p.t.unwrap_or(1.0))?,
                reps: at_least("reps", p.reps.unwrap_or(100_000), 30)?,
                ks_alpha,
                band,
            }
        }
        Experiment::Clt => {
            let n_schedule = positive_grid(
                "n_schedule",
                p.n_schedule.clone().unwrap_or_else(|| vec![1.0, 5.0, 25.0, 100.0, 400.0]),
            )?;
            let probes = p.probes.clone().unwrap_or_else(|| clt::default_probe_grid(model.len(), cfg.base, 8));
            if let Some(bad) = probes.iter().find(|t| t.len() != model.len()) {
                return Err(RunError::config(
                    "params.probes",
                    format!("probe of length {} for {} states", bad.len(), model.len()),
                ));
            }
            let mut lambda_grid = p.lambda_grid.clone().unwrap_or_else(|| vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
            if lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
                return Err(RunError::config("params.lambda_grid", "values must be finite and ≥ 0"));
            }
            lambda_grid.sort_by(f64::total_cmp);
            Plan::Clt {
                n_schedule,
                reps: at_least("reps", p.reps.unwrap_or(10_000), clt::MIN_REPS)?,
                ks_alpha,
                probes,
                eta0: match p.eta0 {
                    Some(v) => positive("eta0", v)?,
                    None => f64::NAN,
                },
                delta_grid: match &p.delta_grid {
                    Some(g) => positive_grid("delta_grid", g.clone())?,
                    None => Vec::new(),
                },
                lambda_grid,
                tightness_min_n: 25.0,
            }
        }
        Experiment::Isomorphism => {
            let violation = model.reversibility_violation();
            if violation > REVERSIBILITY_TOL {
                return Err(RunError::Core(loctime_core::Error::NotSymmetric { violation }));
            }
            Plan::Isomorphism {
                n: positive("n", p.n.unwrap_or(4.0))?,
                reps: at_least("reps", p.reps.unwrap_or(10_000), 30)?,
                ks_alpha,
                band,
            }
        }
        Experiment::Modulus => Plan::Modulus {
            t: positive("t", p.t.unwrap_or(100.0))?,
            reps: at_least("reps", p.reps.unwrap_or(1_000), 1)?,
            constant: positive("constant", p.constant.unwrap_or(loctime_core::entropy::MODULUS_CONSTANT))?,
            min_pass_rate: probability("min_pass_rate", p.min_pass_rate.unwrap_or(0.99))?,
            states: states(model, p)?,
            budget,
        },
    })
}

struct Ctx<'a, R> {
    model: &'a MarkovModel,
    base: usize,
    seed: u64,
    runner: &'a R,
}

pub fn execute<R: ReplicaRunner>(
    plan: &Plan,
    cfg: &ExperimentConfig,
    model: &MarkovModel,
    runner: &R,
) -> Result<ExperimentOutput, RunError> {
    let ctx = Ctx { model, base: cfg.base, seed: cfg.seed, runner };
    match plan {
        Plan::Identities { tolerance, alphas } => identities(&ctx, *tolerance, alphas),
        Plan::Potentials { alphas, reps, band, tolerance, budget } => {
            potentials(&ctx, alphas, *reps, *band, *tolerance, *budget)
        }
        Plan::Metric { reps, band, tolerance } => metric(&ctx, *reps, *band, *tolerance),
        Plan::Entropy { states, weights, delta_grid, optimize_iters, riemann_cells, tolerance } => {
            entropy(&ctx, states, weights.as_deref(), delta_grid, *optimize_iters, *riemann_cells, *tolerance)
        }
        Plan::Rearrangement { eps_low, eps_grid, size_grid } => rearrangement(&ctx, cfg, *eps_low, eps_grid, size_grid),
        Plan::Excursions { level, blocks, band, budget } => excursion_suite(&ctx, *level, *blocks, *band, *budget),
        Plan::Tailbound { a, b, x_grid, y_grid, reps } => tailbound(&ctx, *a, *b, x_grid, y_grid, *reps),
        Plan::Subordinator { a, b, lambda_grid, t, reps, ks_alpha, band } => {
            subordinator(&ctx, *a, *b, lambda_grid, *t, *reps, *ks_alpha, *band)
        }
        Plan::Clt { n_schedule, reps, ks_alpha, probes, eta0, delta_grid, lambda_grid, tightness_min_n } => {
            clt_suite(&ctx, n_schedule, *reps, *ks_alpha, probes, *eta0, delta_grid, lambda_grid, *tightness_min_n)
        }
        Plan::Isomorphism { n, reps, ks_alpha, band } => isomorphism(&ctx, *n, *reps, *ks_alpha, *band),
        Plan::Modulus { t, reps, constant, min_pass_rate, states, budget } => {
            modulus(&ctx, *t, *reps, *constant, *min_pass_rate, states, *budget)
        }
    }
}

fn labels(model: &MarkovModel) -> Vec<String> {
    model.labels().to_vec()
}

fn exact_tables<R>(ctx: &Ctx<'_, R>) -> Result<(CovarianceKernel, IntrinsicMetric), RunError> {
    let killed = killed_densities(ctx.model, ctx.base)?;
    let metric = intrinsic_metric(&killed, ctx.model)?;
    let gamma = covariance_kernel(&killed)?;
    Ok((gamma, metric))
}

fn identities<R>(ctx: &Ctx<'_, R>, tolerance: f64, alphas: &[f64]) -> Result<ExperimentOutput, RunError> {
    let report = check_duality_identities(ctx.model, ctx.base)?;
    let mut out = ExperimentOutput::default();
    let mut table = Table::new("identities", &["identity", "violation", "tolerance"]);
    for (name, v) in report.entries() {
        out.checks.push(Check::violation(name, v, tolerance));
        table.push(row![name, v, tolerance]);
    }
    out.checks.push(Check::holds("distinct_states_at_positive_distance", report.min_off_diagonal_distance > 0.0));
    let mut resolvent = 0.0f64;
    for &a in alphas {
        for &b in alphas {
            if a != b {
                resolvent = resolvent.max(resolvent_identity_residual(ctx.model, a, b)?);
            }
        }
    }
    out.checks.push(Check::violation("resolvent_equation", resolvent, tolerance));
    table.push(row!["resolvent_equation", resolvent, tolerance]);
    out.tables.push(table);
    out.results = json!({
        "max_violation": report.max_violation().max(resolvent),
        "min_off_diagonal_distance": report.min_off_diagonal_distance,
        "min_eigenvalue_gamma": report.min_eigenvalue,
        "balance_residual": ctx.model.balance_residual(),
        "reversibility_violation": ctx.model.reversibility_violation(),
    });
    Ok(out)
}

fn potentials<R: ReplicaRunner>(
    ctx: &Ctx<'_, R>,
    alphas: &[f64],
    reps: usize,
    band: f64,
    tolerance: f64,
    budget: u64,
) -> Result<ExperimentOutput, RunError> {
    let model = ctx.model;
    let names = labels(model);
    let mut out = ExperimentOutput::default();
    let killed = killed_densities(model, ctx.base)?;
    out.tables.push(Table::matrix("killed_densities", &names, |i, j| killed.get(i, j)));
    let h = hitting_moment_table(model)?;
    out.tables.push(Table::matrix("hitting_moment_h", &names, |i, j| h[(i, j)]));
    let mut mc = Table::new("discounted_local_time", &["alpha", "start", "state", "target", "estimate", "se", "z"]);
    let mut per_alpha = Vec::new();
    for (k, &alpha) in alphas.iter().enumerate() {
        let u = resolvent_densities(model, alpha)?;
        out.tables.push(Table::matrix(format!("resolvent_alpha_{}", format_float(alpha)), &names, |i, j| u.get(i, j)));
        // The row sums of u^α against m equal 1/α exactly.
        let mass = (0..model.len()).map(|y| u.get(ctx.base, y) * model.invariant()[y]).sum::<f64>();
        out.checks.push(Check::exact(
            format!("alpha={alpha}: sum_y u(base,y) m(y) = 1/alpha"),
            1.0 / alpha,
            mass,
            tolerance / alpha,
        ));
        if reps > 0 {
            // e^{−αT} < 1e-17 at T = 40/α, so truncation is invisible.
            let horizon = 40.0 / alpha;
            let seed = loctime_core::rng::derive_seed(ctx.seed, k as u64);
            let draws = ctx.runner.map(reps, |i| -> Result<Vec<f64>, loctime_core::Error> {
                let mut rng = replica_seed(seed, i).rng();
                let path = simulate(model, ctx.base, &StopRule::fixed_time(horizon).with_budget(budget), &mut rng)?;
                (0..model.len()).map(|y| discounted_local_time(&path, model, y, alpha)).collect()
            });
            let draws = draws.into_iter().collect::<Result<Vec<_>, _>>()?;
            for y in 0..model.len() {
                let col: Vec<f64> = draws.iter().map(|d| d[y]).collect();
                let est = MeanEstimate::from_samples(&col);
                let target = u.get(ctx.base, y);
                out.checks.push(Check::z(
                    format!("alpha={alpha}: E[int e^(-at) dL^{y}] from base"),
                    target,
                    est.mean,
                    est.se,
                    band,
                ));
                mc.push(row![alpha, ctx.base, y, target, est.mean, est.se, est.z_score(target)]);
            }
        }
        per_alpha.push(
            json!({ "alpha": alpha, "u_base_row": (0..model.len()).map(|y| u.get(ctx.base, y)).collect::<Vec<_>>() }),
        );
    }
    let residual = if alphas.len() > 1 { resolvent_identity_residual(model, alphas[0], alphas[1])? } else { 0.0 };
    out.checks.push(Check::violation("resolvent_equation", residual, tolerance));
    if reps > 0 {
        out.tables.push(mc);
    }
    out.results = json!({ "resolvent": per_alpha, "invariant": model.invariant() });
    Ok(out)
}

fn metric<R: ReplicaRunner>(
    ctx: &Ctx<'_, R>,
    reps: usize,
    band: f64,
    tolerance: f64,
) -> Result<ExperimentOutput, RunError> {
    let model = ctx.model;
    let names = labels(model);
    let (gamma, metric) = exact_tables(ctx)?;
    let report = check_duality_identities(model, ctx.base)?;
    let mut out = ExperimentOutput::default();
    out.checks.push(Check::violation("d^2 = h", report.metric_equals_h, 1e-8));
    out.checks.push(Check::violation("triangle_inequality", report.triangle, 1e-8));
    out.checks.push(Check::violation("gamma_eigen_floor", report.eigen_floor, 1e-8));
    let sampler = build_sampler_default(&gamma)?;
    out.checks.push(Check::violation("factor_reconstruction", sampler.reconstruction_error, tolerance));
    out.tables.push(Table::matrix("distance", &names, |i, j| metric.dist(i, j)));
    out.tables.push(Table::matrix("hitting_moment_h", &names, |i, j| metric.h[(i, j)]));
    out.tables.push(Table::matrix("gamma", &names, |i, j| gamma.get(i, j)));
    let mut cov = Table::new("field_covariance", &["x", "y", "target", "estimate", "se", "z"]);
    if reps > 0 {
        let draws = sample_field(&sampler, reps, ctx.seed, ctx.runner);
        let n = model.len();
        for x in 0..n {
            for y in x..n {
                if x == ctx.base || y == ctx.base {
                    continue;
                }
                let prod: Vec<f64> = draws.iter().map(|d| d[x] * d[y]).collect();
                let est = MeanEstimate::from_samples(&prod);
                out.checks.push(Check::z(
                    format!("E[phi_{x} phi_{y}] = Gamma({x},{y})"),
                    gamma.get(x, y),
                    est.mean,
                    est.se,
                    band,
                ));
                cov.push(row![x, y, gamma.get(x, y), est.mean, est.se, est.z_score(gamma.get(x, y))]);
            }
        }
        let base_zero = draws.iter().all(|d| d[ctx.base] == 0.0);
        out.checks.push(Check::holds("field vanishes at base", base_zero));
        out.tables.push(cov);
    }
    out.results = json!({
        "diameter": metric.diameter(),
        "min_off_diagonal_distance": report.min_off_diagonal_distance,
        "factor_rank": sampler.rank(),
        "min_eigenvalue_gamma": report.min_eigenvalue,
    });
    Ok(out)
}

/// Midpoint-rule value of `η(δ)` computed from ball masses only.
pub fn riemann_eta(space: &FiniteMetricSpace, mu: &WeightMeasure, delta: f64, cells: usize) -> Result<f64, RunError> {
    let dv = delta / cells as f64;
    let mut best = 0.0f64;
    for &z in &space.points {
        let mut acc = 0.0;
        for c in 0..cells {
            let mass = ball_mass(space, mu, z, (c as f64 + 0.5) * dv)?;
            acc += (1.0 / mass).ln().max(0.0).sqrt() * dv;
        }
        best = best.max(acc);
    }
    Ok(best)
}

fn entropy_space<R>(ctx: &Ctx<'_, R>, states: &[usize]) -> Result<(FiniteMetricSpace, IntrinsicMetric), RunError> {
    let (_, metric) = exact_tables(ctx)?;
    Ok((FiniteMetricSpace::from_metric(&metric, Some(states))?, metric))
}

fn entropy<R>(
    ctx: &Ctx<'_, R>,
    states: &[usize],
    weights: Option<&[f64]>,
    delta_grid: &[f64],
    iters: usize,
    cells: usize,
    tolerance: f64,
) -> Result<ExperimentOutput, RunError> {
    let (space, _) = entropy_space(ctx, states)?;
    let mu = match weights {
        Some(w) => WeightMeasure::new(w.to_vec())?,
        None => uniform_weights(&space),
    };
    let grid: Vec<f64> = if delta_grid.is_empty() {
        (1..=64).map(|k| space.diameter * k as f64 / 64.0).collect()
    } else {
        delta_grid.to_vec()
    };
    let profile = entropy_profile(&space, &mu, &grid, false)?;
    let mut out = ExperimentOutput::default();
    let mut table = Table::new("entropy_profile", &["delta", "eta", "argmax_point"]);
    for p in &profile.grid {
        table.push(row![p.delta, p.eta, ctx.model.labels()[p.argmax].clone()]);
    }
    out.tables.push(table);
    let mut bp = Table::new("entropy_breakpoints", &["delta", "eta", "argmax_point"]);
    for p in &profile.at_breakpoints {
        bp.push(row![p.delta, p.eta, ctx.model.labels()[p.argmax].clone()]);
    }
    out.tables.push(bp);

    let eta_d = profile.eta(space.diameter);
    let oracle = riemann_eta(&space, &mu, space.diameter, cells)?;
    out.checks.push(Check {
        rule: "|estimate - target| <= tol * target",
        pass: (eta_d - oracle).abs() <= tolerance * eta_d,
        ..Check::exact("eta(D) exact vs midpoint Riemann oracle", oracle, eta_d, tolerance)
    });
    let slope = (1.0 / mu.min_atom()).ln().sqrt();
    let envelope = profile.grid.iter().all(|p| p.eta <= p.delta * slope * (1.0 + 1e-12));
    out.checks.push(Check::holds("eta(delta) <= delta * sqrt(ln 1/min mu)", envelope));
    let monotone = profile.grid.windows(2).all(|w| w[1].delta < w[0].delta || w[1].eta >= w[0].eta);
    out.checks.push(Check::holds("eta nondecreasing in delta", monotone));

    let optimized = optimize_weights(&space, iters);
    let eta_opt = eta_at_diameter(&space, &optimized);
    let eta_uniform = eta_at_diameter(&space, &uniform_weights(&space));
    out.checks.push(Check::holds("optimizer does not worsen eta(D)", eta_opt <= eta_uniform));
    let mut w = Table::new("weights", &["state", "used", "uniform", "optimized"]);
    for (i, &x) in space.points.iter().enumerate() {
        w.push(row![ctx.model.labels()[x].clone(), mu.weights[i], 1.0 / space.len() as f64, optimized.weights[i]]);
    }
    out.tables.push(w);
    out.results = json!({
        "diameter": space.diameter,
        "eta_at_diameter": eta_d,
        "riemann_oracle": oracle,
        "eta_uniform": eta_uniform,
        "eta_optimized": eta_opt,
        "min_atom": mu.min_atom(),
        "breakpoints": profile.breakpoints,
    });
    Ok(out)
}

fn rearrangement<R>(
    ctx: &Ctx<'_, R>,
    cfg: &ExperimentConfig,
    eps_low: f64,
    eps_grid: &[f64],
    size_grid: &[usize],
) -> Result<ExperimentOutput, RunError> {
    let (_, metric) = exact_tables(ctx)?;
    let d = metric.diameter();
    let r = monotone_rearrangement(ctx.model, &metric, ctx.base, Some(eps_low * d))?;
    let mut out = ExperimentOutput::default();
    let mut prof = Table::new("rearrangement", &["k", "h", "sorted", "m_of_sorted"]);
    for k in 0..r.h_profile.len() {
        prof.push(row![k, r.h_profile[k], r.sorted[k], r.m_of_y(r.sorted[k])]);
    }
    out.tables.push(prof);
    out.checks.push(Check::violation("round trip h_bar(m(y)-) <= y <= h_bar(m(y))", r.round_trip_violation(), 0.0));
    out.checks
        .push(Check::holds("fernique and barlow integrals finite", r.fernique.is_finite() && r.barlow.is_finite()));

    let mut conv =
        Table::new("rearrangement_convergence", &["n", "eps_rel", "eps_low", "diameter", "fernique", "barlow"]);
    let mut all_finite = true;
    let mut rows = Vec::new();
    for &n in size_grid {
        let spec = cfg.model.with_size(n).expect("cycle family");
        let m = spec.build()?;
        let killed = killed_densities(&m, 0)?;
        let metric = intrinsic_metric(&killed, &m)?;
        let d = metric.diameter();
        for &eps in eps_grid {
            let r = monotone_rearrangement(&m, &metric, 0, Some(eps * d))?;
            all_finite &= r.fernique.is_finite() && r.barlow.is_finite();
            conv.push(row![n, eps, eps * d, d, r.fernique, r.barlow]);
            rows.push(json!({ "n": n, "eps_rel": eps, "fernique": r.fernique, "barlow": r.barlow }));
        }
    }
    out.checks.push(Check::holds("integrals finite across sizes and cutoffs", all_finite));
    out.tables.push(conv);
    out.results = json!({
        "eps_low": r.eps_low,
        "eps_up": r.eps_up,
        "x_up": r.x_up,
        "fernique": r.fernique,
        "barlow": r.barlow,
        "round_trip_violation": r.round_trip_violation(),
        "convergence": rows,
    });
    Ok(out)
}

fn excursion_suite<R: ReplicaRunner>(
    ctx: &Ctx<'_, R>,
    level: f64,
    blocks: usize,
    band: f64,
    budget: u64,
) -> Result<ExperimentOutput, RunError> {
    let model = ctx.model;
    // Excursions over [0, τ(s)] form a Poisson process in base local time,
    // so independent blocks of length s/blocks concatenate exactly.
    let piece = level / blocks as f64;
    let sets = ctx.runner.map(blocks, |i| -> Result<(ExcursionSet, u64), loctime_core::Error> {
        let mut rng = replica_seed(ctx.seed, i).rng();
        let path =
            simulate(model, ctx.base, &StopRule::inverse_local_time(ctx.base, piece).with_budget(budget), &mut rng)?;
        Ok((excursions(&path, model, ctx.base)?, path.jumps))
    });
    let mut merged = ExcursionSet { base: ctx.base, records: Vec::new(), discarded: 0, base_local_time: 0.0 };
    let mut jumps = 0u64;
    for s in sets {
        let (s, j) = s?;
        merged.records.extend(s.records);
        merged.discarded += s.discarded;
        merged.base_local_time += s.base_local_time;
        jumps += j;
    }
    let killed = killed_densities(model, ctx.base)?;
    let gamma = covariance_kernel(&killed)?;
    let report = excursion_functionals(&merged, level, &killed, &gamma)?;
    let mut out = ExperimentOutput::default();
    let mut table = Table::new("excursion_measure", &["functional", "x", "y", "target", "estimate", "se", "z"]);
    for (x, e) in &report.first_moment {
        out.checks.push(Check::z(format!("nu(L^{x}) = 1"), e.target, e.estimate, e.se, band));
        table.push(row!["L^x", *x, *x, e.target, e.estimate, e.se, e.z()]);
    }
    for ((x, y), e) in &report.second_moment {
        out.checks.push(Check::z(format!("nu(L^{x} L^{y}) = Gamma({x},{y})"), e.target, e.estimate, e.se, band));
        table.push(row!["L^x L^y", *x, *y, e.target, e.estimate, e.se, e.z()]);
    }
    for (x, e) in &report.hit_rate {
        out.checks.push(Check::z(format!("nu(T_{x} < T_base) = 1/u_T0({x},{x})"), e.target, e.estimate, e.se, band));
        table.push(row!["T_x < T_base", *x, *x, e.target, e.estimate, e.se, e.z()]);
    }
    // Total mass ν(1) = q(base) m(base): departures per unit base local time.
    let count = merged.records.len() as f64;
    let rate_target = model.exit_rate(ctx.base) * model.invariant()[ctx.base];
    out.checks.push(Check::z(
        "excursion count / s = q(base) m(base)",
        rate_target,
        count / level,
        count.sqrt() / level,
        band,
    ));
    table.push(row![
        "count",
        ctx.base,
        ctx.base,
        rate_target,
        count / level,
        count.sqrt() / level,
        (count / level - rate_target) / (count.sqrt() / level)
    ]);
    out.tables.push(table);
    out.log.push(format!(
        "excursions: {} complete, {} discarded, {} jumps over {} blocks",
        merged.records.len(),
        merged.discarded,
        jumps,
        blocks
    ));
    out.results = json!({
        "level": level,
        "records": merged.records.len(),
        "discarded": merged.discarded,
        "base_local_time": merged.base_local_time,
        "jumps": jumps,
    });
    Ok(out)
}

fn tailbound<R: ReplicaRunner>(
    ctx: &Ctx<'_, R>,
    a: usize,
    b: usize,
    x_grid: &[f64],
    y_grid: &[f64],
    reps: usize,
) -> Result<ExperimentOutput, RunError> {
    let mut out = ExperimentOutput::default();
    let mut table = Table::new(
        "tail_bound",
        &["x", "y", "h", "form", "bound", "hits", "trials", "estimate", "lower_99", "upper_99", "pass"],
    );
    let mut rows = Vec::new();
    for (iy, &y) in y_grid.iter().enumerate() {
        for (ix, &x) in x_grid.iter().enumerate() {
            let seed = loctime_core::rng::derive_seed(ctx.seed, (iy * x_grid.len() + ix) as u64);
            let r = tail_bound_experiment(ctx.model, a, b, y, x, reps, seed, ctx.runner)?;
            for (form, c) in [("one_sided", &r.one_sided), ("capped_two_sided", &r.capped_two_sided)] {
                out.checks.push(Check {
                    name: format!("{form} x={x} y={y}: 99% lower bound <= exp bound"),
                    target: c.bound,
                    estimate: c.observed.estimate(),
                    se: Some(c.observed.se()),
                    tolerance: c.lower_99,
                    rule: "one-sided 99% lower confidence bound (tol) <= target",
                    pass: c.passes(),
                    label: None,
                });
                table.push(row![
                    x,
                    y,
                    r.h,
                    form,
                    c.bound,
                    c.observed.hits,
                    c.observed.trials,
                    c.observed.estimate(),
                    c.lower_99,
                    c.upper_99,
                    if c.passes() { "true" } else { "false" }
                ]);
            }
            rows.push(json!({ "x": x, "y": y, "bound": r.one_sided.bound, "one_sided": r.one_sided.observed.estimate(), "capped": r.capped_two_sided.observed.estimate() }));
        }
    }
    out.tables.push(table);
    out.results = json!({ "a": a, "b": b, "grid": rows });
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn subordinator<R: ReplicaRunner>(
    ctx: &Ctx<'_, R>,
    a: usize,
    b: usize,
    lambda_grid: &[f64],
    t: f64,
    reps: usize,
    ks_alpha: f64,
    band: f64,
) -> Result<ExperimentOutput, RunError> {
    let r = subordinator_experiment(ctx.model, a, b, lambda_grid, t, reps, ctx.seed, ctx.runner)?;
    let mut out = ExperimentOutput::default();
    let mut table = Table::new("laplace_transform", &["lambda", "target", "estimate", "se", "z"]);
    for p in &r.points {
        out.checks.push(Check::z(
            format!("E exp(-{} L^a) = exp(-t Psi)", p.lambda),
            p.target,
            p.estimate.mean,
            p.estimate.se,
            band,
        ));
        table.push(row![p.lambda, p.target, p.estimate.mean, p.estimate.se, p.z()]);
    }
    out.tables.push(table);
    out.checks.push(Check::z("E L^a_{tau^b(t)} = t", t, r.mean.mean, r.mean.se, band));
    out.checks.push(Check::ks("first jump time L^b_{T_a} ~ Exp(mean h)", &r.first_jump_time, ks_alpha));
    out.checks.push(Check::ks("first jump size L^a_{T_b} ~ Exp(mean h)", &r.first_jump_size, ks_alpha));
    let markov = strong_markov_check(
        ctx.model,
        a,
        b,
        reps.min(20_000),
        loctime_core::rng::derive_seed(ctx.seed, 1),
        ctx.runner,
    )?;
    out.checks.push(Check::ks("post-T_b law independent of T_b (two-sample)", &markov, ks_alpha));
    let mut ks = Table::new("ks_tests", &["test", "statistic", "p_value", "critical_value", "n_eff"]);
    for (name, k) in
        [("first_jump_time", &r.first_jump_time), ("first_jump_size", &r.first_jump_size), ("strong_markov", &markov)]
    {
        ks.push(row![name, k.statistic, k.p_value, k.critical_value(ks_alpha), k.n_eff]);
    }
    out.tables.push(ks);
    out.results = json!({ "a": a, "b": b, "t": t, "h": r.h, "mean": r.mean.mean, "mean_se": r.mean.se });
    Ok(out)
}

fn verdict_label(v: Verdict) -> Option<&'static str> {
    match v {
        Verdict::PreAsymptotic => Some("pre-asymptotic"),
        _ => None,
    }
}

/// Default oscillation threshold: twice the largest marginal standard
/// deviation of the limit field.
fn default_eta0(gamma: &CovarianceKernel) -> f64 {
    let max_var = (0..gamma.len()).map(|x| gamma.get(x, x)).fold(0.0, f64::max);
    2.0 * max_var.sqrt()
}

/// Just above each distinct distance, plus one value beyond the diameter.
fn default_delta_grid(space: &FiniteMetricSpace) -> Vec<f64> {
    let mut grid: Vec<f64> = space.breakpoints().into_iter().filter(|&d| d > 0.0).map(|d| d * (1.0 + 1e-9)).collect();
    grid.push(space.diameter * 1.5);
    grid
}

#[allow(clippy::too_many_arguments)]
fn clt_suite<R: ReplicaRunner>(
    ctx: &Ctx<'_, R>,
    n_schedule: &[f64],
    reps: usize,
    ks_alpha: f64,
    probes: &[Vec<f64>],
    eta0: f64,
    delta_grid: &[f64],
    lambda_grid: &[f64],
    tightness_min_n: f64,
) -> Result<ExperimentOutput, RunError> {
    let (gamma, metric) = exact_tables(ctx)?;
    let space = FiniteMetricSpace::from_metric(&metric, None)?;
    let profile: EntropyProfile = entropy_profile(&space, &uniform_weights(&space), &[], false)?;
    let eta0 = if eta0.is_nan() { default_eta0(&gamma) } else { eta0 };
    let delta_grid = if delta_grid.is_empty() { default_delta_grid(&space) } else { delta_grid.to_vec() };
    let base = ctx.base;
    let n_states = ctx.model.len();

    let mut out = ExperimentOutput::default();
    let mut moments = Table::new("clt_moments", &["n", "moment", "x", "y", "target", "estimate", "se", "z"]);
    let mut ks_table =
        Table::new("clt_ks", &["n", "state", "statistic", "critical_value", "p_value", "alpha", "verdict"]);
    let mut cf_table = Table::new("clt_cf", &["n", "probe", "t", "re", "im", "target", "discrepancy", "threshold"]);
    let mut per_n = Vec::new();
    let mut tight_samples: Vec<CltSample> = Vec::new();
    for (k, &n) in n_schedule.iter().enumerate() {
        let seed = loctime_core::rng::derive_seed(ctx.seed, k as u64);
        let sample = clt::sample_yn(ctx.model, base, n, reps, seed, ctx.runner)?;
        let m = clt::moment_checks(&sample, &gamma);
        for x in (0..n_states).filter(|&x| x != base) {
            let e = m.mean[x];
            out.checks.push(Check::z(format!("n={n}: E Y({x}) = 0"), 0.0, e.mean, e.se, m.band));
            moments.push(row![n, "mean", x, x, 0.0, e.mean, e.se, m.mean_z(x)]);
            for y in (x..n_states).filter(|&y| y != base) {
                let e = m.second[x * m.dim + y];
                let target = m.target[x * m.dim + y];
                out.checks.push(Check::z(format!("n={n}: E Y({x})Y({y}) = Gamma"), target, e.mean, e.se, m.band));
                moments.push(row![n, "second", x, y, target, e.mean, e.se, m.cov_z(x, y)]);
            }
        }
        let marginal = clt::marginal_gof(&sample, &gamma, ks_alpha);
        for (x, r) in &marginal.tests {
            let c = Check::ks(format!("n={n}: Y({x}) ~ N(0, Gamma({x},{x}))"), r, marginal.alpha_per_test);
            let verdict = if c.pass { Verdict::Pass } else { marginal.verdict };
            ks_table.push(row![
                n,
                *x,
                r.statistic,
                r.critical_value(marginal.alpha_per_test),
                r.p_value,
                marginal.alpha_per_test,
                verdict.label()
            ]);
            out.checks.push(Check { pass: verdict != Verdict::Fail, ..c }.labelled(verdict_label(verdict)));
        }
        let cf = clt::joint_cf_check(&sample, &gamma, probes, ks_alpha);
        for (i, p) in cf.probes.iter().enumerate() {
            let t = p.t.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(" ");
            cf_table.push(row![n, i, t, p.empirical.0, p.empirical.1, p.target, p.discrepancy, cf.threshold]);
        }
        out.checks.push(
            Check {
                name: format!("n={n}: sup_t |cf - exp(-t'Gamma t/2)|"),
                target: 0.0,
                estimate: cf.sup_discrepancy,
                se: None,
                tolerance: cf.threshold,
                rule: "estimate <= tol",
                pass: cf.verdict != Verdict::Fail,
                label: None,
            }
            .labelled(verdict_label(cf.verdict)),
        );
        per_n.push(json!({
            "n": n,
            "moments_max_abs_z": m.max_abs_z(),
            "marginal_verdict": marginal.verdict.label(),
            "cf_sup": cf.sup_discrepancy,
            "cf_threshold": cf.threshold,
            "cf_verdict": cf.verdict.label(),
        }));
        if n >= tightness_min_n {
            tight_samples.push(sample);
        }
    }
    let mut tightness = Value::Null;
    if !tight_samples.is_empty() {
        let t = clt::tightness_diagnostic(&tight_samples, &space, &profile, eta0, &delta_grid, lambda_grid)?;
        let mut osc = Table::new("tightness_oscillation", &["n", "delta", "eta_at_delta", "estimate", "se"]);
        let mut sup = Table::new("tightness_sup", &["n", "lambda", "estimate", "se"]);
        for lv in &t.levels {
            for r in &lv.oscillation {
                osc.push(row![lv.n, r.delta, r.eta_at_delta, r.exceed.estimate(), r.exceed.se()]);
            }
            for (l, p) in &lv.sup_exceed {
                sup.push(row![lv.n, *l, p.estimate(), p.se()]);
            }
        }
        out.tables.push(osc);
        out.tables.push(sup);
        out.checks.push(Check::holds("tightness: sup exceedance nonincreasing in lambda", t.monotone_in_lambda));
        out.checks.push(Check::holds("tightness: oscillation nonincreasing as delta decreases", t.monotone_in_delta));
        // Growth of P(max Y > λ) with n at small λ is the skewed median
        // drifting to the mean, so it is reported but not judged.
        out.checks.push(Check::holds(
            "tightness: small-delta oscillation does not grow with n beyond 3 SE",
            t.oscillation_stable_in_n,
        ));
        tightness = json!({
            "eta0": eta0,
            "levels": t.levels.iter().map(|l| l.n).collect::<Vec<_>>(),
            "delta_grid": delta_grid,
            "lambda_grid": lambda_grid,
            "monotone_in_lambda": t.monotone_in_lambda,
            "monotone_in_delta": t.monotone_in_delta,
            "sup_exceedance_stable_in_n": t.stable_in_n,
            "oscillation_stable_in_n": t.oscillation_stable_in_n,
        });
    }
    out.tables.push(moments);
    out.tables.push(ks_table);
    out.tables.push(cf_table);
    out.tables.push(Table::matrix("gamma", &labels(ctx.model), |i, j| gamma.get(i, j)));
    out.results = json!({ "per_n": per_n, "tightness": tightness, "probe_count": probes.len() });
    Ok(out)
}

fn isomorphism<R: ReplicaRunner>(
    ctx: &Ctx<'_, R>,
    n: f64,
    reps: usize,
    ks_alpha: f64,
    band: f64,
) -> Result<ExperimentOutput, RunError> {
    let r = isomorphism_experiment(ctx.model, ctx.base, n, reps, ks_alpha, ctx.seed, ctx.runner)?;
    let mut out = ExperimentOutput::default();
    let mut table = Table::new(
        "isomorphism",
        &[
            "state",
            "target_mean",
            "local_mean",
            "local_mean_se",
            "gaussian_mean",
            "gaussian_mean_se",
            "target_var",
            "local_var",
            "local_var_se",
            "gaussian_var",
            "gaussian_var_se",
            "ks_statistic",
            "ks_p_value",
        ],
    );
    for s in &r.states {
        let x = s.state;
        out.checks.push(Check::exact(
            format!("state {x}: variance targets agree"),
            s.target_var_local,
            s.target_var_gaussian,
            1e-9 * s.target_var_local.abs().max(1.0),
        ));
        out.checks.push(Check::z(
            format!("state {x}: mean of L + psi^2/2"),
            s.target_mean,
            s.local_mean.mean,
            s.local_mean.se,
            band,
        ));
        out.checks.push(Check::z(
            format!("state {x}: mean of (psi' + sqrt(2n))^2/2"),
            s.target_mean,
            s.gaussian_mean.mean,
            s.gaussian_mean.se,
            band,
        ));
        out.checks.push(Check::z(
            format!("state {x}: variance of L + psi^2/2"),
            s.target_var_local,
            s.local_var.0,
            s.local_var.1,
            band,
        ));
        out.checks.push(Check::z(
            format!("state {x}: variance of (psi' + sqrt(2n))^2/2"),
            s.target_var_gaussian,
            s.gaussian_var.0,
            s.gaussian_var.1,
            band,
        ));
        out.checks.push(Check::ks(format!("state {x}: two-sample KS"), &s.ks, r.ks_alpha));
        table.push(row![
            x,
            s.target_mean,
            s.local_mean.mean,
            s.local_mean.se,
            s.gaussian_mean.mean,
            s.gaussian_mean.se,
            s.target_var_local,
            s.local_var.0,
            s.local_var.1,
            s.gaussian_var.0,
            s.gaussian_var.1,
            s.ks.statistic,
            s.ks.p_value
        ]);
    }
    out.checks.push(Check::violation("base state: both sides equal n", r.base_defect, 1e-9 * n.max(1.0)));
    out.tables.push(table);
    out.results = json!({ "n": n, "reps": reps, "ks_alpha_per_state": r.ks_alpha, "base_defect": r.base_defect });
    Ok(out)
}

fn modulus<R: ReplicaRunner>(
    ctx: &Ctx<'_, R>,
    t: f64,
    reps: usize,
    constant: f64,
    min_pass_rate: f64,
    states: &[usize],
    budget: u64,
) -> Result<ExperimentOutput, RunError> {
    let (space, _) = entropy_space(ctx, states)?;
    let profile = entropy_profile(&space, &uniform_weights(&space), &[], false)?;
    let model = ctx.model;
    let samples = ctx.runner.map(reps, |i| -> Result<_, loctime_core::Error> {
        let mut rng = replica_seed(ctx.seed, i).rng();
        let path = simulate(model, ctx.base, &StopRule::fixed_time(t).with_budget(budget), &mut rng)?;
        modulus_sample(&local_time_fields(&path, model), &space, &profile, constant)
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = summarize_modulus(samples, constant);
    let mut out = ExperimentOutput::default();
    out.checks.push(Check::at_least(
        format!("fraction of replicas with R <= {constant} sqrt(max L)"),
        report.pass_rate,
        min_pass_rate,
    ));
    let mut table = Table::new("modulus", &["replica", "r", "bound", "ratio"]);
    for (i, s) in report.samples.iter().enumerate() {
        table.push(row![i, s.r, s.bound, s.ratio()]);
    }
    out.tables.push(table);
    let mut q = Table::new("modulus_quantiles", &["quantile", "ratio"]);
    for &(p, v) in &report.quantiles {
        q.push(row![p, v]);
    }
    out.tables.push(q);
    out.results = json!({
        "constant": constant,
        "pass_rate": report.pass_rate,
        "quantiles": report.quantiles.iter().map(|(p, v)| json!({ "quantile": p, "ratio": v })).collect::<Vec<_>>(),
        "eta_at_diameter": profile.eta(space.diameter),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use loctime_core::model::Family;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn defaults_are_resolved() {
        let c = cfg("experiment = \"tailbound\"\nmodel = { family = \"cycle_walk\", n = 4, p = 1.0, q = 1.0 }\n");
        let m = c.model.build().unwrap();
        match plan(&c, &m).unwrap() {
            Plan::Tailbound { a, b, x_grid, y_grid, reps } => {
                assert_eq!((a, b), (0, 1));
                assert_eq!(x_grid.len() * y_grid.len(), 9);
                assert_eq!(reps, 100_000);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn static_checks_name_their_field() {
        let field = |text: &str| {
            let c = cfg(text);
            match plan(&c, &c.model.build().unwrap()) {
                Err(RunError::Config { field, .. }) => field,
                other => panic!("{other:?}"),
            }
        };
        let two = "model = { family = \"two_state\", a = 1.0, b = 1.0 }\n";
        assert_eq!(field(&format!("experiment = \"clt\"\nbase = 5\n{two}")), "base");
        assert_eq!(field(&format!("experiment = \"clt\"\n{two}[params]\nreps = 10\n")), "params.reps");
        assert_eq!(field(&format!("experiment = \"rearrangement\"\n{two}")), "model.family");
        assert_eq!(field(&format!("experiment = \"subordinator\"\n{two}[params]\na = 1\nb = 1\n")), "params.b");
        assert_eq!(field(&format!("experiment = \"clt\"\n{two}[params]\nprobes = [[1.0]]\n")), "params.probes");
        assert_eq!(field(&format!("experiment = \"entropy\"\n{two}[params]\nweights = [1.0]\n")), "params.weights");
    }

    #[test]
    fn nonreversible_isomorphism_is_rejected_before_simulation() {
        let c = cfg("experiment = \"isomorphism\"\nmodel = { family = \"cycle_walk\", n = 3, p = 2.0, q = 1.0 }\n");
        let err = plan(&c, &c.model.build().unwrap()).unwrap_err();
        assert_eq!(err.kind(), "NotSymmetric");
    }

    #[test]
    fn riemann_oracle_matches_two_point_closed_form() {
        // Two points at distance sqrt(2) with mass 1/2 each: η(δ) = δ sqrt(ln 2) for δ ≤ sqrt(2).
        let m = MarkovModel::build(&Family::TwoState { a: 1.0, b: 1.0 }).unwrap();
        let metric = intrinsic_metric(&killed_densities(&m, 0).unwrap(), &m).unwrap();
        let space = FiniteMetricSpace::from_metric(&metric, None).unwrap();
        let eta = riemann_eta(&space, &uniform_weights(&space), 1.0, 1000).unwrap();
        assert!((eta - 2f64.ln().sqrt()).abs() < 1e-12);
    }
}
