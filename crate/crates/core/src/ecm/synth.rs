//! Isotropic Gaussian mixtures with optional fixed outliers.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EcmError;
use crate::partition::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub center: Vec<f64>,
    pub sigma: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub components: Vec<Component>,
    #[serde(default)]
    pub outliers: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<usize, EcmError> {
        let first = self.components.first().ok_or_else(|| EcmError::InvalidConfig("no components".into()))?;
        let d = first.center.len();
        if d == 0 {
            return Err(EcmError::InvalidConfig("component centers must be non-empty".into()));
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.center.len() != d || c.center.iter().any(|v| !v.is_finite()) {
                return Err(EcmError::InvalidConfig(format!("component {i}: center must be {d} finite values")));
            }
            if !(c.sigma > 0.0 && c.sigma.is_finite()) {
                return Err(EcmError::InvalidConfig(format!("component {i}: sigma must be positive")));
            }
            if c.count == 0 {
                return Err(EcmError::InvalidConfig(format!("component {i}: count must be at least 1")));
            }
        }
        if let Some(o) = self.outliers.iter().find(|o| o.len() != d || o.iter().any(|v| !v.is_finite())) {
            return Err(EcmError::InvalidConfig(format!("outlier {o:?} must be {d} finite values")));
        }
        Ok(d)
    }
}

/// Draws every component in order, then appends the outliers verbatim.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset, EcmError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for c in &cfg.components {
        for _ in 0..c.count {
            rows.push(c.center.iter().map(|&m| m + c.sigma * rng.sample::<f64, _>(StandardNormal)).collect());
        }
    }
    rows.extend(cfg.outliers.iter().cloned());
    Ok(Dataset::from_rows(&rows)?)
}

/// Built-in synthetic protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Two unit-variance blobs of 100 points plus two outliers.
    Fig1,
    /// The same two blobs without outliers.
    Easy,
    /// Three unit-variance blobs of 100 points.
    Full3,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig1, Preset::Easy, Preset::Full3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Easy => "easy",
            Preset::Full3 => "full3",
        }
    }

    pub fn n_clusters(self) -> usize {
        match self {
            Preset::Fig1 | Preset::Easy => 2,
            Preset::Full3 => 3,
        }
    }

    pub fn config(self, seed: u64) -> SynthConfig {
        let blob = |x: f64, y: f64| Component { center: vec![x, y], sigma: 1.0, count: 100 };
        let (components, outliers) = match self {
            Preset::Fig1 => (vec![blob(3.0, 5.0), blob(5.0, 3.0)], vec![vec![2.0, 2.0], vec![6.0, 6.0]]),
            Preset::Easy => (vec![blob(3.0, 5.0), blob(5.0, 3.0)], vec![]),
            Preset::Full3 => (vec![blob(3.0, 3.0), blob(6.0, 3.0), blob(4.5, 6.0)], vec![]),
        };
        SynthConfig { components, outliers, seed }
    }
}

impl FromStr for Preset {
    type Err = EcmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| EcmError::InvalidConfig(format!("unknown preset {s:?} (expected fig1, easy or full3)")))
    }
}
