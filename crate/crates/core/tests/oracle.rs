//! Closed forms and exact identities checked against a dense Gauss-Jordan
//! solver that shares no code with the crate's linear algebra.

#![allow(clippy::needless_range_loop)]

use loctime_core::model::{Family, MarkovModel};
use loctime_core::potential::{
    check_duality_identities, covariance_kernel, hitting_moment_h, intrinsic_metric, killed_densities,
    resolvent_densities,
};

mod support;
use support::dense::*;

fn catalog() -> Vec<(&'static str, MarkovModel)> {
    [
        ("two_state(1,1)", Family::TwoState { a: 1.0, b: 1.0 }),
        ("two_state(2,3)", Family::TwoState { a: 2.0, b: 3.0 }),
        ("birth_death(5)", Family::birth_death_uniform(5, 1.0, 1.0)),
        ("cycle_walk(3,2,1)", Family::CycleWalk { n: 3, p: 2.0, q: 1.0 }),
        ("cycle_walk(8,1,1)", Family::CycleWalk { n: 8, p: 1.0, q: 1.0 }),
        ("cycle_walk(7,3,1)", Family::CycleWalk { n: 7, p: 3.0, q: 1.0 }),
        ("jump_cycle(16)", Family::JumpCycle { n: 16, exponent: 0.5, scale: 1.0 }),
    ]
    .into_iter()
    .map(|(name, f)| (name, MarkovModel::build(&f).unwrap()))
    .collect()
}

#[test]
fn two_state_closed_forms() {
    let m = MarkovModel::build(&Family::TwoState { a: 1.0, b: 1.0 }).unwrap();
    let u = resolvent_densities(&m, 1.0).unwrap();
    assert!((u.get(0, 0) - 4.0 / 3.0).abs() < 1e-10);
    assert!((u.get(0, 1) - 2.0 / 3.0).abs() < 1e-10);
    let k = killed_densities(&m, 0).unwrap();
    assert!((k.get(1, 1) - 2.0).abs() < 1e-10);
    let d = intrinsic_metric(&k, &m).unwrap();
    assert!((d.dist(0, 1) - 2f64.sqrt()).abs() < 1e-10);
    let g = covariance_kernel(&k).unwrap();
    for (x, y, v) in [(0, 0, 0.0), (0, 1, 0.0), (1, 0, 0.0), (1, 1, 4.0)] {
        assert!((g.get(x, y) - v).abs() < 1e-10);
    }
    assert!((hitting_moment_h(&m, 1, 0).unwrap() - 2.0).abs() < 1e-10);
    assert!((hitting_moment_h(&m, 0, 1).unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn cycle_closed_forms() {
    let m = MarkovModel::build(&Family::CycleWalk { n: 3, p: 2.0, q: 1.0 }).unwrap();
    for &w in m.invariant() {
        assert!((w - 1.0 / 3.0).abs() < 1e-12);
    }
    let k = killed_densities(&m, 0).unwrap();
    let expect = [[9.0 / 7.0, 6.0 / 7.0], [3.0 / 7.0, 9.0 / 7.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((k.get(i + 1, j + 1) - expect[i][j]).abs() < 1e-10);
        }
    }
    let d = intrinsic_metric(&k, &m).unwrap();
    assert!((d.dist(1, 2).powi(2) - 9.0 / 7.0).abs() < 1e-10);
    assert!((hitting_moment_h(&m, 1, 2).unwrap() - 9.0 / 7.0).abs() < 1e-10);
    let g = covariance_kernel(&k).unwrap();
    assert!((g.get(1, 2) - 9.0 / 7.0).abs() < 1e-10);
}

#[test]
fn resolvent_matches_dense_oracle() {
    for (name, m) in catalog() {
        for alpha in [0.1, 1.0, 10.0] {
            let u = resolvent_densities(&m, alpha).unwrap();
            let o = oracle_resolvent(&m, alpha);
            for (i, row) in o.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    assert!((u.get(i, j) - v).abs() <= 1e-10 * v.abs().max(1.0), "{name} α={alpha} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn killed_tables_match_dense_oracle() {
    for (name, m) in catalog() {
        for base in [0, m.len() - 1] {
            let k = killed_densities(&m, base).unwrap();
            let o = oracle_killed(&m, base);
            for (i, row) in o.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    assert!((k.get(i, j) - v).abs() <= 1e-10 * v.abs().max(1.0), "{name} base={base} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn metric_from_oracle_tables() {
    // d²(x,y) computed from oracle killed tables at base x: h(y,x) = u_{T_x}(y,y).
    for (name, m) in catalog() {
        let k = killed_densities(&m, 0).unwrap();
        let d = intrinsic_metric(&k, &m).unwrap();
        for x in 0..m.len() {
            let o = oracle_killed(&m, x);
            for y in 0..m.len() {
                if x != y {
                    let h = o[y][y];
                    assert!((d.dist(x, y).powi(2) - h).abs() <= 1e-9 * h.max(1.0), "{name} ({x},{y})");
                }
            }
        }
    }
}

#[test]
fn identity_suite_on_catalog() {
    for (name, m) in catalog() {
        let r = check_duality_identities(&m, 0).unwrap();
        let tol = if name.starts_with("two_state") { 1e-10 } else { 1e-8 };
        assert!(r.max_violation() <= tol, "{name}: {:?}", r);
    }
}
