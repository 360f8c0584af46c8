use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::GeneratorEndpointConfig;
use crate::prompt::SdraConfig;
use crate::voting::ScoringMetric;

pub const DEFAULT_STUB_DROPOUT: f64 = 0.3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which generator produces candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Stub {
        #[serde(default = "default_dropout")]
        dropout: f64,
    },
    Remote(GeneratorEndpointConfig),
}

fn default_dropout() -> f64 {
    DEFAULT_STUB_DROPOUT
}

fn default_parallelism() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_metrics() -> Vec<ScoringMetric> {
    vec![ScoringMetric::CosineTf]
}

fn default_generator() -> GeneratorSpec {
    GeneratorSpec::Stub { dropout: DEFAULT_STUB_DROPOUT }
}

/// Everything one run or sweep needs. Relative paths are resolved against
/// the config file's directory by [`ExperimentConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus_path: PathBuf,
    pub vocab_path: PathBuf,
    pub category_path: PathBuf,
    pub query_path: PathBuf,
    /// Ground-truth recipes keyed by query id; the datastore is used when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_path: Option<PathBuf>,
    #[serde(default)]
    pub sdra: SdraConfig,
    pub s_values: Vec<usize>,
    #[serde(default = "default_metrics")]
    pub scoring_metrics: Vec<ScoringMetric>,
    #[serde(default = "default_generator")]
    pub generator: GeneratorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_limit: Option<usize>,
    #[serde(default)]
    pub global_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_true")]
    pub strict: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_path);
        fix(&mut self.vocab_path);
        fix(&mut self.category_path);
        fix(&mut self.query_path);
        fix(&mut self.output_dir);
        if let Some(p) = self.gt_path.as_mut() {
            fix(p);
        }
    }

    pub fn max_s(&self) -> usize {
        self.s_values.iter().copied().max().unwrap_or(1)
    }

    pub fn primary_metric(&self) -> ScoringMetric {
        self.scoring_metrics.first().copied().unwrap_or(ScoringMetric::CosineTf)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.sdra.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.s_values.is_empty() {
            return invalid("s_values is empty".into());
        }
        if let Some(s) = self.s_values.iter().find(|&&s| s == 0 || s % 2 == 0) {
            return invalid(format!("s_values must be odd positive integers, found {s}"));
        }
        if self.s_values.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("s_values must be strictly ascending".into());
        }
        if self.max_s() > self.sdra.k {
            return invalid(format!("max S = {} exceeds k = {}", self.max_s(), self.sdra.k));
        }
        if self.scoring_metrics.is_empty() {
            return invalid("scoring_metrics is empty".into());
        }
        if self.sample_limit == Some(0) {
            return invalid("sample_limit must be at least 1".into());
        }
        if self.parallelism == 0 {
            return invalid("parallelism must be at least 1".into());
        }
        match &self.generator {
            GeneratorSpec::Stub { dropout } if !(0.0..=1.0).contains(dropout) => {
                invalid(format!("stub dropout {dropout} outside [0, 1]"))
            }
            GeneratorSpec::Remote(r) => r.validate().map_err(|e| ConfigError::Invalid(e.to_string())),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
corpus_path = "corpus.jsonl"
vocab_path = "vocab.tsv"
category_path = "cats.txt"
query_path = "queries.jsonl"
s_values = [1, 3, 5]
scoring_metrics = ["cosine-tf", "rouge-l"]
output_dir = "out"
global_seed = 7

[sdra]
k = 50
mode = "stochastic"
sets = "two"
sampling = "matched"

[generator]
kind = "stub"
dropout = 0.3
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.max_s(), 5);
        assert_eq!(cfg.scoring_metrics, [ScoringMetric::CosineTf, ScoringMetric::RougeL]);
        assert_eq!(cfg.generator, GeneratorSpec::Stub { dropout: 0.3 });
        assert_eq!(cfg.parallelism, 1);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn remote_generator_section() {
        let text = BASE.replace(
            "kind = \"stub\"\ndropout = 0.3",
            "kind = \"remote\"\nbase_url = \"http://localhost:8000\"\nmodel_name = \"m\"\nmax_retries = 3",
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        match cfg.generator {
            GeneratorSpec::Remote(r) => assert_eq!(r.max_retries, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_grids() {
        for (from, to) in [
            ("s_values = [1, 3, 5]", "s_values = [3, 1]"),
            ("s_values = [1, 3, 5]", "s_values = [2]"),
            ("s_values = [1, 3, 5]", "s_values = []"),
            ("k = 50", "k = 3"),
            ("global_seed = 7", "global_seed = 7\nsample_limit = 0"),
            ("dropout = 0.3", "dropout = 1.3"),
        ] {
            let text = BASE.replace(from, to);
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{to}");
        }
        assert!(matches!(ExperimentConfig::from_toml("nonsense ="), Err(ConfigError::Parse(_))));
    }
}
