//! Run and generator configuration files: flat JSON, schema-validated,
//! unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use frets_core::data::{MissingPolicy, SplitSpec, SynthComponent};
use frets_core::fremlp::Activation;
use frets_core::model::{LearnerDomain, ModelConfig};
use frets_core::train::TrainConfig;
use frets_core::{Error, Result};

fn d_train_ratio() -> f64 {
    0.7
}
fn d_val_ratio() -> f64 {
    0.2
}
fn d_test_ratio() -> f64 {
    0.1
}
fn d_embed() -> usize {
    128
}
fn d_hidden() -> usize {
    256
}
fn d_true() -> bool {
    true
}
fn d_one() -> usize {
    1
}
fn d_activation() -> Activation {
    Activation::Relu
}
fn d_domain() -> LearnerDomain {
    LearnerDomain::Frequency
}
fn d_lr() -> f64 {
    1e-3
}
fn d_batch() -> usize {
    32
}
fn d_epochs() -> usize {
    100
}
fn d_patience() -> usize {
    10
}
fn d_missing() -> MissingPolicy {
    MissingPolicy::Error
}

/// Everything one training run needs. Channel count comes from the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: String,
    #[serde(default = "d_train_ratio")]
    pub train_ratio: f64,
    #[serde(default = "d_val_ratio")]
    pub val_ratio: f64,
    #[serde(default = "d_test_ratio")]
    pub test_ratio: f64,
    pub lookback: usize,
    pub horizon: usize,
    #[serde(default = "d_embed")]
    pub embed_dim: usize,
    #[serde(default = "d_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "d_true")]
    pub use_channel_learner: bool,
    #[serde(default = "d_true")]
    pub use_temporal_learner: bool,
    #[serde(default)]
    pub channel_independent: bool,
    #[serde(default = "d_one")]
    pub fremlp_layers: usize,
    #[serde(default = "d_activation")]
    pub activation: Activation,
    #[serde(default = "d_domain")]
    pub learner_domain: LearnerDomain,
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_patience")]
    pub patience: usize,
    #[serde(default)]
    pub min_delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub skip_timestamp_column: bool,
    #[serde(default = "d_missing")]
    pub missing_policy: MissingPolicy,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 {
            return Err(Error::config("lookback and horizon must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::config("lr must be a positive finite number"));
        }
        self.split_spec()?;
        Ok(())
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        SplitSpec::new(self.train_ratio, self.val_ratio, self.test_ratio)
    }

    pub fn model_config(&self, channels: usize) -> ModelConfig {
        ModelConfig {
            lookback: self.lookback,
            horizon: self.horizon,
            channels,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            use_channel_learner: self.use_channel_learner,
            use_temporal_learner: self.use_temporal_learner,
            channel_independent: self.channel_independent,
            fremlp_layers: self.fremlp_layers,
            activation: self.activation,
            learner_domain: self.learner_domain,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            patience: self.patience,
            min_delta: self.min_delta,
            seed: self.seed,
        }
    }

    /// Output directory: the `--out` flag wins over the config field.
    pub fn resolve_out_dir(&self, flag: Option<&Path>) -> Result<PathBuf> {
        match (flag, &self.out_dir) {
            (Some(p), _) => Ok(p.to_path_buf()),
            (None, Some(s)) => Ok(PathBuf::from(s)),
            (None, None) => Err(Error::config(
                "no output directory: set out_dir in the config or pass --out",
            )),
        }
    }
}

/// Synthetic dataset generator spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub channels: usize,
    pub timestamps: usize,
    #[serde(default)]
    pub components: Vec<SynthComponent>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn load(path: &Path) -> Result<SynthSpec> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read generator spec {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"dataset": "d.csv", "lookback": 8, "horizon": 4}"#).unwrap();
        assert_eq!(cfg.embed_dim, 128);
        assert_eq!(cfg.hidden_dim, 256);
        assert_eq!(cfg.batch_size, 32);
        assert_eq!(cfg.epochs, 100);
        assert_eq!(cfg.patience, 10);
        assert_eq!(cfg.lr, 1e-3);
        assert!(cfg.use_channel_learner && cfg.use_temporal_learner);
        assert_eq!(cfg.train_ratio, 0.7);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(
            r#"{"dataset": "d.csv", "lookback": 8, "horizon": 4, "lookbck": 9}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("lookbck"), "{err}");
    }

    #[test]
    fn bad_ratios_fail_validation() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"dataset": "d.csv", "lookback": 8, "horizon": 4, "train_ratio": 0.9}"#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
