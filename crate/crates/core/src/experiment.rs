//! End-to-end synthetic experiments.
//!
//! A model is pretrained once per seed on a labeled marker sensor and then
//! evaluated on target sensors before and after adaptation. The acceptance
//! suite and several examples are thin wrappers around these functions.

use crate::error::{Error, Result};
use crate::eval::embed::export_embeddings;
use crate::eval::report::{build_group_report, GroupReport};
use crate::model::file::TrainedModel;
use crate::model::params::Architecture;
use crate::model::transfer::TransferKind;
use crate::sim::dataset::{generate_dataset, inpaint_dataset, Dataset};
use crate::sim::domain::DomainConfig;
use crate::sim::path::PathSpec;
use crate::sim::render::stream_seed;
use crate::train::config::TrainConfig;
use crate::train::split::{split_target, TARGET_SPLIT};
use crate::train::trace::TraceRecord;
use crate::train::trainer::{adapt, pretrain_source, UnlabeledImages};

/// Stream index for the pixel noise of separately rendered target sensors.
const TARGET_RENDER_STREAM: u64 = 0x7A46;

/// The full in-depth sequence (361 classes) on a 3x3 surface grid: 3,249
/// samples per sensor, enough for pretraining to converge in 20 epochs while
/// keeping a three-seed run well inside a CPU budget.
pub fn experiment_path() -> PathSpec {
    PathSpec {
        grid_nx: 3,
        grid_ny: 3,
        ..PathSpec::full()
    }
}

/// How a target sensor's images are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSpec {
    /// The source images with markers removed by inpainting.
    Inpainted,
    /// A separately rendered sensor.
    Rendered(DomainConfig),
}

impl TargetSpec {
    pub fn domain(&self, source: DomainConfig) -> DomainConfig {
        match *self {
            TargetSpec::Inpainted => DomainConfig {
                markers: false,
                ..source
            },
            TargetSpec::Rendered(d) => d,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub path: PathSpec,
    pub source: DomainConfig,
    pub arch: Architecture,
    pub pretrain: TrainConfig,
    pub adapt: TrainConfig,
    pub split_ratios: [f64; 3],
    pub marker_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let path = experiment_path();
        ExperimentConfig {
            arch: Architecture {
                num_classes: path.num_classes(),
                ..Architecture::default()
            },
            path,
            source: DomainConfig::new(true, 0, 0).expect("valid domain"),
            pretrain: TrainConfig::pretrain(),
            adapt: TrainConfig::adapt(),
            split_ratios: TARGET_SPLIT,
            marker_threshold: 0.18,
        }
    }
}

impl ExperimentConfig {
    /// The same protocol on the sparse path (441 samples, 49 classes); runs
    /// in seconds.
    pub fn quick() -> Self {
        let path = PathSpec::sparse();
        ExperimentConfig {
            arch: Architecture {
                num_classes: path.num_classes(),
                ..Architecture::default()
            },
            path,
            ..Self::default()
        }
    }
}

/// A source dataset and the model pretrained on it.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub seed: u64,
    pub source: Dataset,
    pub model: TrainedModel,
    pub trace: Vec<TraceRecord>,
}

pub fn pretrain(cfg: &ExperimentConfig, seed: u64) -> Result<Pretrained> {
    let source = generate_dataset(cfg.source, &cfg.path, seed, true)?;
    let mut train_cfg = cfg.pretrain.clone();
    train_cfg.seed = seed;
    let out = pretrain_source(&source, &cfg.arch, &train_cfg)?;
    Ok(Pretrained {
        seed,
        source,
        model: out.model,
        trace: out.trace,
    })
}

/// Labeled target data; labels are only ever read by evaluation.
pub fn build_target(cfg: &ExperimentConfig, pre: &Pretrained, target: TargetSpec) -> Result<Dataset> {
    match target {
        TargetSpec::Inpainted => inpaint_dataset(&pre.source, cfg.marker_threshold),
        TargetSpec::Rendered(d) => generate_dataset(d, &cfg.path, stream_seed(pre.seed, TARGET_RENDER_STREAM), true),
    }
}

/// Target train images and labeled test split of one seed.
pub fn target_splits(cfg: &ExperimentConfig, target: &Dataset, seed: u64) -> Result<(UnlabeledImages, Dataset)> {
    let (train, _valid, test) = split_target(target, cfg.split_ratios, seed)?;
    Ok((UnlabeledImages::from_dataset(&train.without_labels()), test))
}

/// Source-only error of the pretrained model on a target's test split.
pub fn source_only_report(cfg: &ExperimentConfig, pre: &Pretrained, target: &Dataset) -> Result<GroupReport> {
    let (_, test) = target_splits(cfg, target, pre.seed)?;
    build_group_report(&pre.model, &test)
}

#[derive(Debug, Clone)]
pub struct AdaptationRun {
    pub source_only: GroupReport,
    pub adapted: GroupReport,
    /// Source/target feature-centroid distance of the pretrained model.
    pub centroid_before: f64,
    pub centroid_after: f64,
    pub model: TrainedModel,
    pub trace: Vec<TraceRecord>,
}

impl AdaptationRun {
    /// Adapted over source-only average MAE.
    pub fn mae_ratio(&self) -> f64 {
        self.adapted.avg_mae / self.source_only.avg_mae
    }
}

/// Adapt the pretrained model to `target` with `transfer` and evaluate both
/// models on the same test split.
pub fn run_adaptation(
    cfg: &ExperimentConfig,
    pre: &Pretrained,
    target: &Dataset,
    transfer: TransferKind,
) -> Result<AdaptationRun> {
    let (train_images, test) = target_splits(cfg, target, pre.seed)?;
    let mut adapt_cfg = cfg.adapt.clone();
    adapt_cfg.seed = pre.seed;
    adapt_cfg.transfer = transfer;
    let out = adapt(&pre.source, &train_images, &pre.model, &adapt_cfg)?;
    let mut model = out.model;
    model.metadata.split_seed = Some(pre.seed);
    model.metadata.split_ratios = Some(cfg.split_ratios);
    Ok(AdaptationRun {
        source_only: build_group_report(&pre.model, &test)?,
        adapted: build_group_report(&model, &test)?,
        centroid_before: export_embeddings(&pre.model, &pre.source, &test)?.centroid_distance()?,
        centroid_after: export_embeddings(&model, &pre.source, &test)?.centroid_distance()?,
        model,
        trace: out.trace,
    })
}

/// Median of a non-empty sample; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("median needs a non-empty sample without NaN"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Ok(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
