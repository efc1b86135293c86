//! Flat key-value run configuration. Keys mirror the command-line flags;
//! flags given on the command line win.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::corrupt::FalseGenConfig;
use crate::oracle::{ConfigError, OracleConfig, ToleranceMode};
use crate::record::DatasetConfig;
use crate::truegen::TrueGenConfig;

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub true_count: Option<usize>,
    pub false_count: Option<usize>,
    pub epsilon: Option<f64>,
    pub trials: Option<usize>,
    pub min_valid_samples: Option<usize>,
    pub resample_limit: Option<usize>,
    pub tolerance_mode: Option<ToleranceMode>,
    pub interval_low: Option<f64>,
    pub interval_high: Option<f64>,
    pub depth_walk: Option<usize>,
    pub instantiation_depth: Option<usize>,
    pub max_nodes: Option<usize>,
    pub retry_budget: Option<usize>,
    pub valid_steps: Option<usize>,
    pub filter_artifacts: Option<bool>,
    pub max_retries: Option<usize>,
    /// Leakage bound for `audit`.
    pub bound: Option<f64>,
    /// Axiom files; the built-in set when absent.
    pub axioms: Option<Vec<PathBuf>>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Oracle(#[from] ConfigError),
    #[error("max-nodes {max_nodes} is smaller than axiom {id} ({size} nodes)")]
    MaxNodesTooSmall { max_nodes: usize, id: String, size: usize },
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<RunConfig, RunConfigError> {
        toml::from_str(text).map_err(|source| RunConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig, RunConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::parse(&text, path)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => {
                RunConfig { $($f: over.$f.or(self.$f)),* }
            };
        }
        pick!(
            seed, true_count, false_count, epsilon, trials, min_valid_samples, resample_limit, tolerance_mode,
            interval_low, interval_high, depth_walk, instantiation_depth, max_nodes, retry_budget, valid_steps,
            filter_artifacts, max_retries, bound, axioms
        )
    }

    pub fn oracle(&self) -> Result<OracleConfig, ConfigError> {
        let d = OracleConfig::default();
        let cfg = OracleConfig {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            trials: self.trials.unwrap_or(d.trials),
            interval: (
                self.interval_low.unwrap_or(d.interval.0),
                self.interval_high.unwrap_or(d.interval.1),
            ),
            min_valid_samples: self.min_valid_samples.unwrap_or(d.min_valid_samples),
            resample_limit: self.resample_limit.unwrap_or(d.resample_limit),
            tolerance_mode: self.tolerance_mode.unwrap_or(d.tolerance_mode),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn dataset(&self) -> Result<DatasetConfig, ConfigError> {
        let oracle = self.oracle()?;
        let d = TrueGenConfig::default();
        let truegen = TrueGenConfig {
            depth_walk: self.depth_walk.unwrap_or(d.depth_walk),
            instantiation_depth: self.instantiation_depth.unwrap_or(d.instantiation_depth),
            max_nodes: self.max_nodes.unwrap_or(d.max_nodes),
            seed: self.seed(),
            retry_budget: self.retry_budget.unwrap_or(d.retry_budget),
            oracle,
            sampler: d.sampler,
        };
        let f = FalseGenConfig::default();
        let falsegen = FalseGenConfig {
            valid_steps: self.valid_steps.unwrap_or(f.valid_steps),
            filter_artifacts: self.filter_artifacts.unwrap_or(f.filter_artifacts),
            max_retries: self.max_retries.unwrap_or(f.max_retries),
            base: truegen.clone(),
        };
        let dd = DatasetConfig::default();
        Ok(DatasetConfig {
            true_count: self.true_count.unwrap_or(dd.true_count),
            false_count: self.false_count.unwrap_or(dd.false_count),
            seed: self.seed(),
            truegen,
            falsegen,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_keys_parse() {
        let text = "seed = 7\ntrue-count = 10\nepsilon = 1e-5\ntolerance-mode = \"absolute\"\nfilter-artifacts = false\n";
        let c = RunConfig::parse(text, Path::new("c.toml")).unwrap();
        assert_eq!(c.seed, Some(7));
        let o = c.oracle().unwrap();
        assert_eq!(o.epsilon, 1e-5);
        assert_eq!(o.tolerance_mode, ToleranceMode::Absolute);
        let d = c.dataset().unwrap();
        assert_eq!(d.true_count, 10);
        assert!(!d.falsegen.filter_artifacts);
        assert_eq!(d.falsegen.base.oracle, o);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_errors() {
        assert!(RunConfig::parse("colour = 1", Path::new("c")).is_err());
        let c = RunConfig::parse("epsilon = -1.0", Path::new("c")).unwrap();
        assert!(c.oracle().is_err());
    }

    #[test]
    fn command_line_wins() {
        let file = RunConfig {
            seed: Some(1),
            trials: Some(4),
            ..RunConfig::default()
        };
        let flags = RunConfig {
            seed: Some(2),
            ..RunConfig::default()
        };
        let c = file.overridden_by(flags);
        assert_eq!((c.seed, c.trials), (Some(2), Some(4)));
    }
}
