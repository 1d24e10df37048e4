//! Experiment configuration: a single TOML file per run.

use std::path::{Path, PathBuf};

use loctime_core::model::{Family, FamilyTag, MarkovModel};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Identities,
    Potentials,
    Metric,
    Entropy,
    Rearrangement,
    Excursions,
    Tailbound,
    Subordinator,
    Clt,
    Isomorphism,
    Modulus,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Identities,
        Experiment::Potentials,
        Experiment::Metric,
        Experiment::Entropy,
        Experiment::Rearrangement,
        Experiment::Excursions,
        Experiment::Tailbound,
        Experiment::Subordinator,
        Experiment::Clt,
        Experiment::Isomorphism,
        Experiment::Modulus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::Potentials => "potentials",
            Experiment::Metric => "metric",
            Experiment::Entropy => "entropy",
            Experiment::Rearrangement => "rearrangement",
            Experiment::Excursions => "excursions",
            Experiment::Tailbound => "tailbound",
            Experiment::Subordinator => "subordinator",
            Experiment::Clt => "clt",
            Experiment::Isomorphism => "isomorphism",
            Experiment::Modulus => "modulus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// Scalar or per-edge rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Uniform(f64),
    PerEdge(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoState {
        a: f64,
        b: f64,
    },
    BirthDeath {
        n: usize,
        birth: Rates,
        death: Rates,
    },
    CycleWalk {
        n: usize,
        p: f64,
        q: f64,
    },
    JumpCycle {
        n: usize,
        #[serde(default = "default_exponent")]
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Custom {
        rates: Vec<Vec<f64>>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
}

fn default_exponent() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn family(&self) -> Result<Family, RunError> {
        Ok(match self {
            ModelSpec::TwoState { a, b } => Family::TwoState { a: *a, b: *b },
            ModelSpec::BirthDeath { n, birth, death } => {
                let edges = n.saturating_sub(1);
                let expand = |field: &str, r: &Rates| -> Result<Vec<f64>, RunError> {
                    match r {
                        Rates::Uniform(v) => Ok(vec![*v; edges]),
                        Rates::PerEdge(v) if v.len() == edges => Ok(v.clone()),
                        Rates::PerEdge(v) => Err(RunError::config(
                            &format!("model.{field}"),
                            format!("expected {edges} rates for n = {n}, got {}", v.len()),
                        )),
                    }
                };
                Family::BirthDeath { birth: expand("birth", birth)?, death: expand("death", death)? }
            }
            ModelSpec::CycleWalk { n, p, q } => Family::CycleWalk { n: *n, p: *p, q: *q },
            ModelSpec::JumpCycle { n, exponent, scale } => {
                Family::JumpCycle { n: *n, exponent: *exponent, scale: *scale }
            }
            ModelSpec::Custom { rates, .. } => Family::Custom { rates: rates.clone() },
        })
    }

    /// Same family with the state count replaced, for size sweeps.
    pub fn with_size(&self, n: usize) -> Option<ModelSpec> {
        match self {
            ModelSpec::CycleWalk { p, q, .. } => Some(ModelSpec::CycleWalk { n, p: *p, q: *q }),
            ModelSpec::JumpCycle { exponent, scale, .. } => {
                Some(ModelSpec::JumpCycle { n, exponent: *exponent, scale: *scale })
            }
            _ => None,
        }
    }

    pub fn build(&self) -> Result<MarkovModel, RunError> {
        let model = MarkovModel::build(&self.family()?).map_err(|e| RunError::prefixed(e, "model"))?;
        match self {
            ModelSpec::Custom { labels: Some(labels), .. } => {
                model.with_labels(labels.clone()).map_err(|e| RunError::prefixed(e, "model"))
            }
            _ => Ok(model),
        }
    }
}

/// Experiment parameters; every field is optional and resolved against
/// per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub reps: Option<usize>,
    pub alphas: Option<Vec<f64>>,
    pub n: Option<f64>,
    pub n_schedule: Option<Vec<f64>>,
    pub level: Option<f64>,
    pub blocks: Option<usize>,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub t: Option<f64>,
    pub x_grid: Option<Vec<f64>>,
    pub y_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub delta_grid: Option<Vec<f64>>,
    pub eps_low: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub size_grid: Option<Vec<usize>>,
    pub states: Option<Vec<usize>>,
    pub weights: Option<Vec<f64>>,
    pub optimize_iters: Option<usize>,
    pub riemann_cells: Option<usize>,
    pub probes: Option<Vec<Vec<f64>>>,
    pub eta0: Option<f64>,
    pub ks_alpha: Option<f64>,
    pub tolerance: Option<f64>,
    pub constant: Option<f64>,
    pub min_pass_rate: Option<f64>,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub base: usize,
    pub experiment: Experiment,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_workers() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("loctime-out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::config("config", e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Catalog entry for `list-models`.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub family: &'static str,
    pub parameters: Vec<(&'static str, &'static str)>,
    pub example: &'static str,
}

pub fn list_models() -> Vec<CatalogEntry> {
    FamilyTag::ALL
        .iter()
        .map(|tag| match tag {
            FamilyTag::TwoState => CatalogEntry {
                family: tag.name(),
                parameters: vec![("a", "rate 0 → 1, > 0"), ("b", "rate 1 → 0, > 0")],
                example: "{ family = \"two_state\", a = 1.0, b = 1.0 }",
            },
            FamilyTag::BirthDeath => CatalogEntry {
                family: tag.name(),
                parameters: vec![
                    ("n", "states, ≥ 2"),
                    ("birth", "rate k → k+1: scalar or n−1 values, > 0"),
                    ("death", "rate k+1 → k: scalar or n−1 values, > 0"),
                ],
                example: "{ family = \"birth_death\", n = 5, birth = 1.0, death = 1.0 }",
            },
            FamilyTag::CycleWalk => CatalogEntry {
                family: tag.name(),
                parameters: vec![
                    ("n", "states, ≥ 3"),
                    ("p", "clockwise rate, ≥ 0"),
                    ("q", "counter-clockwise rate, ≥ 0"),
                ],
                example: "{ family = \"cycle_walk\", n = 8, p = 1.0, q = 1.0 }",
            },
            FamilyTag::JumpCycle => CatalogEntry {
                family: tag.name(),
                parameters: vec![
                    ("n", "states, ≥ 3"),
                    ("exponent", "jump k has rate scale·min(k, n−k)^−(1+exponent); default 0.5"),
                    ("scale", "> 0; default 1"),
                ],
                example: "{ family = \"jump_cycle\", n = 16, exponent = 0.5 }",
            },
            FamilyTag::Custom => CatalogEntry {
                family: tag.name(),
                parameters: vec![("rates", "n×n generator, rows sum to 0"), ("labels", "optional state names")],
                example: "{ family = \"custom\", rates = [[-1.0, 1.0], [2.0, -2.0]] }",
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_rates_expand_per_edge() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"metric\"\nmodel = { family = \"birth_death\", n = 4, birth = 2.0, death = [1.0, 1.0, 3.0] }\n",
        )
        .unwrap();
        match cfg.model.family().unwrap() {
            Family::BirthDeath { birth, death } => {
                assert_eq!(birth, vec![2.0; 3]);
                assert_eq!(death, vec![1.0, 1.0, 3.0]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.base, 0);
    }

    #[test]
    fn wrong_rate_count_names_the_field() {
        let spec = ModelSpec::BirthDeath { n: 4, birth: Rates::PerEdge(vec![1.0]), death: Rates::Uniform(1.0) };
        match spec.family() {
            Err(RunError::Config { field, .. }) => assert_eq!(field, "model.birth"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let base = "experiment = \"metric\"\nmodel = { family = \"two_state\", a = 1.0, b = 1.0 }\n";
        assert!(ExperimentConfig::from_toml(&format!("{base}colour = 1\n")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{base}[params]\nrepz = 1\n")).is_err());
        assert!(ExperimentConfig::from_toml(
            "experiment = \"nope\"\nmodel = { family = \"two_state\", a = 1.0, b = 1.0 }\n"
        )
        .is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"clt\"\nseed = 9\nmodel = { family = \"jump_cycle\", n = 6 }\n[params]\nn_schedule = [1.0, 4.0]\n",
        )
        .unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn experiment_names_parse_back() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::parse(e.name()), Some(e));
        }
        assert_eq!(list_models().len(), FamilyTag::ALL.len());
    }

    #[test]
    fn size_override_only_for_cycles() {
        let c = ModelSpec::CycleWalk { n: 3, p: 1.0, q: 1.0 };
        assert_eq!(c.with_size(8), Some(ModelSpec::CycleWalk { n: 8, p: 1.0, q: 1.0 }));
        assert_eq!(ModelSpec::TwoState { a: 1.0, b: 1.0 }.with_size(8), None);
    }
}
