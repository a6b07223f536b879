//! Run configuration read from `--config`.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use credex::ecm::{EcmConfig, SynthConfig};

/// Every field is optional; explicit flags override it.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub synth: Option<SynthConfig>,
    pub ecm: Option<EcmConfig>,
    pub input: Option<PathBuf>,
    pub ingest: Option<PathBuf>,
    pub lambda: Option<String>,
    pub eval_lambda: Option<String>,
    pub emit: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_parses() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 3, "ecm": {"n_clusters": 3}, "lambda": "0,inf"}"#).unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.ecm.unwrap().n_clusters, 3);
        assert_eq!(cfg.lambda.as_deref(), Some("0,inf"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 3}"#).is_err());
    }
}
