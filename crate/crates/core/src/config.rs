//! Service configuration, loaded from a JSON file.
//!
//! ```json
//! {
//!   "port": 8087,
//!   "data_dir": "out",
//!   "cep_rules": "rules/drought.cep",
//!   "inference_rules": "rules/drought.rules",
//!   "vocabularies": ["vocab/ssn.vocab", "vocab/ikon.vocab"]
//! }
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct Config {
    pub port: u16,
    pub data_dir: PathBuf,
    pub cep_rules: PathBuf,
    pub inference_rules: PathBuf,
    pub vocabularies: Vec<PathBuf>,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let invalid = |key: &'static str, reason: String| ConfigError::Invalid { key, reason };
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| invalid("root", format!("not valid JSON: {e}")))?;
        let object = value
            .as_object()
            .ok_or_else(|| invalid("root", "expected a JSON object".into()))?;

        let port = object
            .get("port")
            .and_then(|v| v.as_u64())
            .filter(|p| *p <= u16::MAX as u64)
            .ok_or_else(|| invalid("port", "expected an integer in [0, 65535]".into()))?
            as u16;

        let path_field = |key: &'static str| -> Result<PathBuf, ConfigError> {
            let raw = object
                .get(key)
                .and_then(|v| v.as_str())
                .ok_or_else(|| invalid(key, "expected a path string".into()))?;
            Ok(base.join(raw))
        };
        let data_dir = path_field("data_dir")?;
        let cep_rules = path_field("cep_rules")?;
        let inference_rules = path_field("inference_rules")?;

        let vocabularies = object
            .get("vocabularies")
            .and_then(|v| v.as_array())
            .ok_or_else(|| invalid("vocabularies", "expected an array of paths".into()))?
            .iter()
            .map(|v| {
                v.as_str()
                    .map(|s| base.join(s))
                    .ok_or_else(|| invalid("vocabularies", "expected an array of paths".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Config {
            port,
            data_dir,
            cep_rules,
            inference_rules,
            vocabularies,
        })
    }

    pub fn triples_path(&self) -> PathBuf {
        self.data_dir.join("triples.nt")
    }

    pub fn event_log_path(&self) -> PathBuf {
        self.data_dir.join("events.ndjson")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}
