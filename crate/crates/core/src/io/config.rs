//! Run configuration files.
//!
//! A config is a JSON object with optional `data`, `model`, `train` and
//! `adapt` sections. Missing keys take their stage defaults, unknown keys are
//! rejected, and every error carries the JSON path of the offending value.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::params::Architecture;
use crate::train::config::TrainConfig;
use crate::train::split::TARGET_SPLIT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Target train/valid/test ratios.
    pub split_ratios: [f64; 3],
    /// Seed of the target split when the manifest carries no split tags.
    pub split_seed: u64,
    /// Mean intensity below which a pixel is treated as marker when
    /// inpainting.
    pub marker_threshold: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            split_ratios: TARGET_SPLIT,
            split_seed: 0,
            marker_threshold: 0.18,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: Architecture,
    /// Source-only pretraining.
    pub train: TrainConfig,
    pub adapt: TrainConfig,
    /// Whether the file set `model.num_classes` itself; otherwise commands
    /// may take the class count from the dataset.
    #[serde(skip)]
    pub explicit_num_classes: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            model: Architecture::default(),
            train: TrainConfig::pretrain(),
            adapt: TrainConfig::adapt(),
            explicit_num_classes: false,
        }
    }
}

impl RunConfig {
    /// The resolved config as pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// Range checks, reported at the path of the first bad value.
    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if d.split_ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0))
            || (d.split_ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(range("$.data.split_ratios", "ratios must be non-negative and sum to 1"));
        }
        if !(d.marker_threshold > 0.0 && d.marker_threshold < 1.0) {
            return Err(range("$.data.marker_threshold", "must lie in (0, 1)"));
        }
        self.model.validate().map_err(|e| range("$.model", &e.to_string()))?;
        check_stage("train", &self.train)?;
        check_stage("adapt", &self.adapt)
    }
}

fn range(path: &str, message: &str) -> Error {
    Error::Config {
        json_path: path.to_string(),
        message: message.to_string(),
    }
}

fn check_stage(stage: &str, c: &TrainConfig) -> Result<()> {
    let at = |field: &str| format!("$.{stage}.{field}");
    let finite_pos = |v: f64| v.is_finite() && v > 0.0;
    if !finite_pos(c.eta0) {
        return Err(range(&at("eta0"), "must be positive"));
    }
    if c.epochs == 0 {
        return Err(range(&at("epochs"), "must be at least 1"));
    }
    if c.batch_size < 2 {
        return Err(range(&at("batch_size"), "must be at least 2"));
    }
    if !(c.momentum >= 0.0 && c.momentum < 1.0) {
        return Err(range(&at("momentum"), "must lie in [0, 1)"));
    }
    if !(c.schedule.a.is_finite() && c.schedule.a >= 0.0) {
        return Err(range(&at("schedule.a"), "must be >= 0"));
    }
    if !(c.schedule.p.is_finite() && c.schedule.p >= 0.0) {
        return Err(range(&at("schedule.p"), "must be >= 0"));
    }
    if !(c.backbone_lr_factor > 0.0 && c.backbone_lr_factor <= 1.0) {
        return Err(range(&at("backbone_lr_factor"), "must lie in (0, 1]"));
    }
    let w = &c.loss_weights;
    for (name, v) in [
        ("lambda_r", w.lambda_r),
        ("lambda_c", w.lambda_c),
        ("lambda_t", w.lambda_t),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(range(
                &at(&format!("loss_weights.{name}")),
                &format!("must be >= 0, got {v}"),
            ));
        }
    }
    if !finite_pos(c.kernel.kernel_mul) {
        return Err(range(&at("kernel.kernel_mul"), "must be positive"));
    }
    if c.kernel.kernel_num == 0 {
        return Err(range(&at("kernel.kernel_num"), "must be at least 1"));
    }
    Ok(())
}

/// Overlay `patch` onto `base`, recursing into objects.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let user: Value = serde_json::from_str(text).map_err(|e| Error::Config {
        json_path: "$".into(),
        message: e.to_string(),
    })?;
    if !user.is_object() {
        return Err(range("$", "config must be a JSON object"));
    }
    let explicit_num_classes = user.pointer("/model/num_classes").is_some();
    let mut resolved = RunConfig::default().to_value();
    merge(&mut resolved, user);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(resolved).map_err(|e| {
        let path = e.path().to_string();
        Error::Config {
            json_path: if path == "." { "$".into() } else { format!("$.{path}") },
            message: e.into_inner().to_string(),
        }
    })?;
    cfg.explicit_num_classes = explicit_num_classes;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}
