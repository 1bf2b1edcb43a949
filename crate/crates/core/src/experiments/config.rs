//! Structured experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::real::{RealConfig, SchemaOverrides};
use crate::experiments::synthetic::SweepConfig;
use crate::perturb::PerturbationConfig;
use crate::select::Aggregator;

/// Top-level config file: any subset of the sections may be present.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub sweep: Option<SweepSection>,
    pub real: Option<RealSection>,
    pub perturbation: Option<PerturbationSection>,
    pub select: Option<SelectSection>,
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config(path: impl AsRef<Path>) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn parse_aggregator(s: &Option<String>) -> Result<Aggregator<f64>> {
    match s {
        None => Ok(Aggregator::lower_quartile()),
        Some(s) => s.parse(),
    }
}

/// `[sweep]` section; every field is optional and falls back to the default
/// sweep configuration.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sizes: Option<Vec<usize>>,
    pub mu: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub m_sets: Option<usize>,
    pub aggregator: Option<String>,
}

impl SweepSection {
    pub fn into_config(self) -> Result<SweepConfig> {
        let defaults = SweepConfig::default();
        let cfg = SweepConfig {
            sizes: self.sizes.unwrap_or(defaults.sizes),
            mu_grid: self.mu.unwrap_or(defaults.mu_grid),
            sigma_grid: self.sigma.unwrap_or(defaults.sigma_grid),
            gamma_grid: self.gamma.unwrap_or(defaults.gamma_grid),
            reps: self.reps.unwrap_or(defaults.reps),
            seed: self.seed.unwrap_or(defaults.seed),
            replicas: self.replicas.unwrap_or(defaults.replicas),
            m_sets: self.m_sets.unwrap_or(defaults.m_sets),
            aggregator: parse_aggregator(&self.aggregator)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `[real]` section.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RealSection {
    pub data: PathBuf,
    pub target: String,
    pub subset_size: Option<usize>,
    pub folds: Option<usize>,
    pub max_subsets: Option<usize>,
    pub sigma: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub xi: Option<f64>,
    pub lambda: Option<f64>,
    pub replicas: Option<usize>,
    pub m_sets: Option<usize>,
    pub aggregator: Option<String>,
    pub tree_candidates: Option<usize>,
    pub subsample_frac: Option<f64>,
    pub max_depth: Option<usize>,
    pub drop_threshold: Option<f64>,
    pub impute_neighbors: Option<usize>,
    pub seed: Option<u64>,
    pub schema: Option<SchemaSection>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSection {
    #[serde(default)]
    pub nominal: Vec<String>,
    #[serde(default)]
    pub ordinal: Vec<String>,
}

impl RealSection {
    pub fn into_config(self) -> Result<RealConfig> {
        let mut cfg = RealConfig::new(self.data, self.target);
        if let Some(v) = self.subset_size {
            cfg.subset_size = v;
        }
        if let Some(v) = self.folds {
            cfg.n_folds = v;
        }
        cfg.max_subsets = self.max_subsets;
        if let Some(v) = self.sigma {
            cfg.sigma_grid = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma_grid = v;
        }
        if let Some(v) = self.xi {
            cfg.xi = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.replicas {
            cfg.replicas = v;
        }
        if let Some(v) = self.m_sets {
            cfg.m_sets = v;
        }
        cfg.aggregator = parse_aggregator(&self.aggregator)?;
        if let Some(v) = self.tree_candidates {
            cfg.tree_candidates = v;
        }
        if let Some(v) = self.subsample_frac {
            cfg.subsample_frac = v;
        }
        if let Some(v) = self.max_depth {
            cfg.max_depth = v;
        }
        if let Some(v) = self.drop_threshold {
            cfg.drop_threshold = v;
        }
        if let Some(v) = self.impute_neighbors {
            cfg.impute_neighbors = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(schema) = self.schema {
            cfg.schema = SchemaOverrides {
                nominal: schema.nominal,
                ordinal: schema.ordinal,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Column selection for the `[perturbation]` section: the string `"all"` or
/// an explicit list of column indices.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum FeatureSelection {
    Named(String),
    List(Vec<usize>),
}

impl Default for FeatureSelection {
    fn default() -> Self {
        FeatureSelection::Named("all".to_owned())
    }
}

impl FeatureSelection {
    pub fn resolve(&self, n_features: usize) -> Result<Vec<usize>> {
        match self {
            FeatureSelection::Named(s) if s == "all" => Ok((0..n_features).collect()),
            FeatureSelection::Named(s) => Err(Error::Config(format!(
                "perturb_features must be \"all\" or a list of indices, got {s:?}"
            ))),
            FeatureSelection::List(cols) => Ok(cols.clone()),
        }
    }
}

/// `[perturbation]` section. Round-trips [`PerturbationConfig`] through the
/// config file with the keys `sigma, xi, lambda, perturb_features, k,
/// m_sets, seed`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub sigma: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub perturb_features: FeatureSelection,
    pub k: usize,
    pub m_sets: usize,
    pub seed: u64,
}

impl PerturbationSection {
    pub fn into_config(&self, n_features: usize) -> Result<PerturbationConfig<f64>> {
        Ok(PerturbationConfig {
            sigma: self.sigma,
            xi: self.xi,
            lambda: self.lambda,
            perturb_features: self.perturb_features.resolve(n_features)?,
            replicas: self.k,
            m_sets: self.m_sets,
            seed: self.seed,
        })
    }

    pub fn from_config(cfg: &PerturbationConfig<f64>, n_features: usize) -> Self {
        let all: Vec<usize> = (0..n_features).collect();
        PerturbationSection {
            sigma: cfg.sigma,
            xi: cfg.xi,
            lambda: cfg.lambda,
            perturb_features: if cfg.perturb_features == all {
                FeatureSelection::default()
            } else {
                FeatureSelection::List(cfg.perturb_features.clone())
            },
            k: cfg.replicas,
            m_sets: cfg.m_sets,
            seed: cfg.seed,
        }
    }
}

/// `[select]` section: dataset plus candidate-pool choice for the `select`
/// command.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SelectSection {
    pub data: PathBuf,
    pub target: String,
    /// "logistic-pairs" (default) or "trees".
    pub pool: Option<String>,
    pub metric: Option<String>,
    pub aggregator: Option<String>,
    pub train_frac: Option<f64>,
    pub tree_candidates: Option<usize>,
    pub subsample_frac: Option<f64>,
    pub max_depth: Option<usize>,
    pub seed: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = r#"
[sweep]
sizes = [50]
mu = [0.5, 1.5]
sigma = [1e-3]
gamma = [0.1, 0.3]
reps = 10
seed = 3
aggregator = "q:0.25"

[perturbation]
sigma = 0.1
xi = 0.1
lambda = 0.1
perturb_features = "all"
k = 7
m_sets = 100
seed = 11
"#;
        let cfg = parse_config(text).unwrap();
        let sweep = cfg.sweep.unwrap().into_config().unwrap();
        assert_eq!(sweep.sizes, vec![50]);
        assert_eq!(sweep.reps, 10);
        assert_eq!(sweep.m_sets, 100); // default
        let pert = cfg.perturbation.unwrap().into_config(5).unwrap();
        assert_eq!(pert.perturb_features, vec![0, 1, 2, 3, 4]);
        assert_eq!(pert.replicas, 7);
    }

    #[test]
    fn perturbation_section_round_trips() {
        let cfg = PerturbationConfig {
            sigma: 0.25,
            xi: 0.1,
            lambda: 0.4,
            perturb_features: vec![0, 2],
            replicas: 3,
            m_sets: 20,
            seed: 77,
        };
        let section = PerturbationSection::from_config(&cfg, 5);
        let text = toml::to_string(&section).unwrap();
        for key in ["sigma", "xi", "lambda", "perturb_features", "k", "m_sets", "seed"] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
        let parsed: PerturbationSection = toml::from_str(&text).unwrap();
        assert_eq!(parsed.into_config(5).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("[sweep]\nbogus = 1\n").is_err());
    }

    #[test]
    fn feature_selection_accepts_all_or_list() {
        let all = FeatureSelection::Named("all".into());
        assert_eq!(all.resolve(3).unwrap(), vec![0, 1, 2]);
        let list = FeatureSelection::List(vec![1]);
        assert_eq!(list.resolve(3).unwrap(), vec![1]);
        let bad = FeatureSelection::Named("some".into());
        assert!(bad.resolve(3).is_err());
    }
}
