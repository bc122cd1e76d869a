//! The single JSON document that configures every subcommand.

use std::path::{Path, PathBuf};

use lesionkit::preprocess::InputChannelSet;
use lesionkit::{
    EvalConfig, LabelCodes, LossConfig, PostprocessRules, RescaleConfig, SimpleConfig, SlidingWindowConfig, TtaConfig,
};
use serde::{Deserialize, Serialize};

use crate::fail::Failure;

/// Bumped whenever a config key is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "LESIONKIT_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolkitConfig {
    pub schema_version: u32,
    pub labels: LabelCodes,
    pub channels: InputChannelSet,
    pub rescale: RescaleConfig,
    /// Reorient inputs to canonical axes before rescaling.
    pub canonicalize: bool,
    /// Isotropic spacing (mm) to resample to; `null` keeps the input grid.
    pub target_spacing: Option<f64>,
    pub eval: EvalConfig,
    pub postprocess: PostprocessRules,
    pub simple: SimpleConfig,
    pub sliding_window: SlidingWindowConfig,
    pub tta: TtaConfig,
    pub loss: LossConfig,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    pub threads: usize,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        ToolkitConfig {
            schema_version: SCHEMA_VERSION,
            labels: LabelCodes::default(),
            channels: InputChannelSet::default(),
            rescale: RescaleConfig::default(),
            canonicalize: true,
            target_spacing: Some(1.0),
            eval: EvalConfig::default(),
            postprocess: PostprocessRules::default(),
            simple: SimpleConfig::default(),
            sliding_window: SlidingWindowConfig::default(),
            tta: TtaConfig::default(),
            loss: LossConfig::default(),
            output_dir: None,
            threads: 0,
        }
    }
}

impl ToolkitConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let cfg: ToolkitConfig =
            serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Failure::Invalid(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(s) = self.target_spacing {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Failure::Invalid(format!("target_spacing must be > 0, got {s}")));
            }
        }
        self.labels.validate()?;
        self.rescale.validate()?;
        self.eval.validate()?;
        self.simple.validate()?;
        self.sliding_window.validate()?;
        self.tta.validate()?;
        self.loss.validate()?;
        Ok(())
    }
}
