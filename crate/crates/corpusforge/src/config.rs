//! Pipeline configuration, read from TOML.

use std::path::{Path, PathBuf};

use corpusforge_core::align::{AlignerConfig, Variant};
use corpusforge_core::dedup::BalanceConfig;
use corpusforge_core::quantities::QuantityConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sparql::FetchConfig;

pub const OUTPUT_ENV: &str = "CORPUSFORGE_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Line-delimited page file.
    pub pages: Option<PathBuf>,
    /// Fact file; when absent the measurement run fetches facts.
    pub facts: Option<PathBuf>,
    /// Interchange file with external annotations.
    pub annotations: Option<PathBuf>,
    /// Unit registry replacing the shipped one.
    pub units: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    /// Extra sentence-splitter abbreviations.
    pub abbreviations: Vec<String>,
    pub quantities: QuantityConfig,
    pub balance: BalanceConfig,
    pub aligner: AlignerConfig,
    pub facts: FetchConfig,
    /// Measurement variants to write; empty means all.
    pub variants: Vec<Variant>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Read a config file. Relative paths are resolved against its
    /// directory; the output directory may be overridden from the
    /// environment.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.paths.pages);
        fix(&mut self.paths.facts);
        fix(&mut self.paths.annotations);
        fix(&mut self.paths.units);
        fix(&mut self.paths.output);
        fix(&mut self.facts.client.archive);
    }

    pub fn apply_env(&mut self) {
        if let Ok(out) = std::env::var(OUTPUT_ENV) {
            self.paths.output = Some(PathBuf::from(out));
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Err(e) = self.quantities.rendering.validate() {
            return bad(e.to_string());
        }
        if let Err(m) = self.quantities.citations.validate() {
            return bad(m.into());
        }
        if self.quantities.token_budget == 0 {
            return bad("token_budget must be positive".into());
        }
        if let Err(m) = self.balance.validate() {
            return bad(m.into());
        }
        if let Err(m) = self.aligner.validate() {
            return bad(m.into());
        }
        if self.facts.concurrency == 0 {
            return bad("facts.concurrency must be positive".into());
        }
        Ok(())
    }

    pub fn output_dir(&self) -> Result<&Path, ConfigError> {
        self.paths
            .output
            .as_deref()
            .ok_or_else(|| ConfigError::Invalid("paths.output is not set".into()))
    }

    pub fn selected_variants(&self) -> Vec<Variant> {
        if self.variants.is_empty() {
            Variant::ALL.to_vec()
        } else {
            self.variants.clone()
        }
    }

    /// Hash of the settings that influence outputs. Paths are left out so
    /// the same inputs give the same hash wherever they live.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        c.facts.client.archive = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = PipelineConfig::from_toml(
            "seed = 7\n[paths]\npages = \"pages.jsonl\"\n[balance]\nu_thr = 300\nt_thr = 1000\n[aligner]\nstrict = true\n",
            Path::new("x.toml"),
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.balance.u_thr, Some(300));
        assert!(cfg.aligner.strict);
        assert_eq!(cfg.quantities.rendering.combined, 0.05);
        cfg.validate().unwrap();
        assert_eq!(cfg.selected_variants().len(), 6);
    }

    #[test]
    fn rejects_bad_values() {
        let e = PipelineConfig::from_toml(
            "[quantities.rendering]\ninput_only = 0.5\noutput_only = 0.5\ncombined = 0.5\n",
            Path::new("x"),
        )
        .unwrap()
        .validate();
        assert!(matches!(e, Err(ConfigError::Invalid(_))));
        assert!(PipelineConfig::from_toml("sed = 1", Path::new("x")).is_err());
    }

    #[test]
    fn hash_ignores_paths() {
        let mut a = PipelineConfig::default();
        let mut b = PipelineConfig::default();
        a.paths.output = Some("one".into());
        b.paths.output = Some("two".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
