//! Source-only pretraining and domain adaptation.
//!
//! Both stages draw fixed-size batches from shuffled streams. An epoch is
//! `ceil(max(n_s, n_t) / batch)` iterations; a stream that runs out is
//! reshuffled and continues, so the shorter domain is cycled.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::file::{ModelMetadata, TrainedModel};
use crate::model::matrix::Matrix;
use crate::model::network::sample_input;
use crate::model::params::{Architecture, ModelParams};
use crate::model::transfer::TransferKind;
use crate::sim::dataset::{Dataset, ImageRef};
use crate::sim::domain::DomainConfig;
use crate::sim::path::onehot;
use crate::sim::render::stream_seed;
use crate::train::config::TrainConfig;
use crate::train::grad::{compute_gradients, LossBreakdown, LossOptions, SourceBatch, TargetBatch};
use crate::train::normalize::NormalizationSpec;
use crate::train::optim::{lr_schedule, SgdMomentum};
use crate::train::trace::TraceRecord;

const SOURCE_STREAM: u64 = 1;
const TARGET_STREAM: u64 = 2;

/// Contact/reference image pairs of a target domain.
///
/// Built from image references alone: nothing downstream of this type can
/// reach a target label.
#[derive(Debug, Clone)]
pub struct UnlabeledImages {
    pairs: Vec<(ImageRef, ImageRef)>,
    domain: Option<DomainConfig>,
}

impl UnlabeledImages {
    pub fn from_pairs(pairs: Vec<(ImageRef, ImageRef)>, domain: Option<DomainConfig>) -> Self {
        UnlabeledImages { pairs, domain }
    }

    pub fn from_dataset(dataset: &Dataset) -> Self {
        let domains = dataset.domains();
        UnlabeledImages {
            pairs: dataset
                .samples
                .iter()
                .map(|s| (s.contact.clone(), s.reference.clone()))
                .collect(),
            domain: (domains.len() == 1).then(|| domains[0]),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn domain(&self) -> Option<DomainConfig> {
        self.domain
    }

    /// Decode file-backed images once.
    pub fn load_images(&self) -> Result<Self> {
        let mut cache = std::collections::HashMap::new();
        let mut fetch = |r: &ImageRef| -> Result<ImageRef> {
            match r {
                ImageRef::Memory(_) => Ok(r.clone()),
                ImageRef::File(p) => {
                    if let Some(img) = cache.get(p) {
                        return Ok(ImageRef::Memory(std::sync::Arc::clone(img)));
                    }
                    let img = r.load()?;
                    cache.insert(p.clone(), std::sync::Arc::clone(&img));
                    Ok(ImageRef::Memory(img))
                }
            }
        };
        let pairs = self
            .pairs
            .iter()
            .map(|(c, r)| Ok((fetch(c)?, fetch(r)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(UnlabeledImages {
            pairs,
            domain: self.domain,
        })
    }

    /// The pairs at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        UnlabeledImages {
            pairs: indices.iter().map(|&i| self.pairs[i].clone()).collect(),
            domain: self.domain,
        }
    }

    pub fn inputs(&self, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
        indices
            .iter()
            .map(|&i| {
                let (c, r) = &self.pairs[i];
                sample_input(&*c.load()?, &*r.load()?)
            })
            .collect()
    }
}

/// Result of a training stage.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub trace: Vec<TraceRecord>,
}

/// Labeled source data prepared for batching.
struct SourceData {
    images: UnlabeledImages,
    targets: Vec<[f64; 3]>,
    labels: Option<Vec<usize>>,
}

impl SourceData {
    fn new(source: &Dataset, norm: &NormalizationSpec, num_classes: usize) -> Result<Self> {
        let mut targets = Vec::with_capacity(source.len());
        for s in &source.samples {
            let f = s
                .force
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("source sample {} has no force label", s.id)))?;
            targets.push(norm.normalize_label(f));
        }
        let labels = if source.samples.iter().all(|s| s.class_index.is_some()) {
            let l: Vec<usize> = source.samples.iter().map(|s| s.class_index.expect("checked")).collect();
            if let Some(&bad) = l.iter().find(|&&c| c >= num_classes) {
                return Err(Error::invalid(format!(
                    "source class index {bad} out of range for a {num_classes}-class model"
                )));
            }
            Some(l)
        } else {
            None
        };
        Ok(SourceData {
            images: UnlabeledImages::from_dataset(source).load_images()?,
            targets,
            labels,
        })
    }

    fn batch(&self, idx: &[usize], num_classes: usize) -> Result<(Vec<Vec<f64>>, Matrix, Option<Matrix>)> {
        let inputs = self.images.inputs(idx)?;
        let targets = Matrix::from_rows(&idx.iter().map(|&i| self.targets[i].to_vec()).collect::<Vec<_>>())?;
        let labels = match &self.labels {
            Some(l) => Some(Matrix::from_rows(
                &idx.iter()
                    .map(|&i| onehot(l[i], num_classes))
                    .collect::<Result<Vec<_>>>()?,
            )?),
            None => None,
        };
        Ok((inputs, targets, labels))
    }
}

/// Endless shuffled index stream.
struct Stream {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl Stream {
    fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Stream { order, pos: 0, rng }
    }

    fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// Row label of an adapted model in comparison tables.
pub fn method_label(transfer: TransferKind) -> &'static str {
    match transfer {
        TransferKind::Lmmd => "ours-lmmd",
        TransferKind::Mmd => "mmd-baseline",
        TransferKind::Coral => "coral-baseline",
    }
}

fn single_domain(d: &Dataset) -> Option<DomainConfig> {
    let v = d.domains();
    (v.len() == 1).then(|| v[0])
}

fn run(
    params: &mut ModelParams,
    source: &SourceData,
    target: Option<&UnlabeledImages>,
    config: &TrainConfig,
    stage: &str,
) -> Result<Vec<TraceRecord>> {
    let num_classes = params.arch.num_classes;
    let opts = LossOptions {
        weights: config.loss_weights,
        transfer: config.transfer,
        kernel: config.kernel,
        pseudo_label_grad: config.pseudo_label_grad,
    };
    let n_s = source.targets.len();
    let n_t = target.map_or(0, UnlabeledImages::len);
    let b = config.batch_size;
    let per_epoch = n_s.max(n_t).div_ceil(b);
    let mut src_stream = Stream::new(n_s, stream_seed(config.seed, SOURCE_STREAM));
    let mut tgt_stream = Stream::new(n_t, stream_seed(config.seed, TARGET_STREAM));
    let mut opt = SgdMomentum::new(params, config.momentum, config.backbone_lr_factor);
    let mut trace = Vec::with_capacity(config.epochs);
    let mut iteration: u64 = 0;
    for epoch in 1..=config.epochs {
        let mut sum = LossBreakdown::default();
        let mut eta = config.eta0;
        for _ in 0..per_epoch {
            let (inputs, targets, labels) = source.batch(&src_stream.next_batch(b), num_classes)?;
            let tgt_inputs = match target {
                Some(t) => Some(t.inputs(&tgt_stream.next_batch(b))?),
                None => None,
            };
            let src = SourceBatch {
                inputs: &inputs,
                targets: &targets,
                labels: labels.as_ref(),
            };
            let tgt = tgt_inputs.as_ref().map(|x| TargetBatch { inputs: x });
            let (loss, grads) = compute_gradients(params, &src, tgt.as_ref(), &opts)?;
            if !loss.total.is_finite() || !grads.is_finite() {
                return Err(Error::invalid(format!(
                    "{stage}: training diverged at iteration {iteration}"
                )));
            }
            eta = lr_schedule(config.eta0, iteration, &config.schedule);
            opt.step(params, &grads, eta)?;
            sum.regression += loss.regression;
            sum.classification += loss.classification;
            sum.transfer += loss.transfer;
            iteration += 1;
        }
        let k = per_epoch as f64;
        let rec = TraceRecord {
            epoch,
            iteration: iteration - 1,
            l_r: sum.regression / k,
            l_c: sum.classification / k,
            l_t: sum.transfer / k,
            eta,
        };
        log::info!(
            "{stage} epoch {epoch}/{}: L_r={:.5} L_c={:.4} L_t={:.5} eta={:.5}",
            config.epochs,
            rec.l_r,
            rec.l_c,
            rec.l_t,
            rec.eta
        );
        trace.push(rec);
    }
    Ok(trace)
}

/// Train on labeled source data with the regression loss alone. The loss
/// weights of `config` are overridden with `(1, 0, 0)`.
pub fn pretrain_source(source: &Dataset, arch: &Architecture, config: &TrainConfig) -> Result<TrainOutcome> {
    let mut config = config.clone();
    config.loss_weights = crate::model::loss::LossWeights::PRETRAIN;
    config.validate()?;
    arch.validate()?;
    if source.is_empty() || !source.is_labeled() {
        return Err(Error::invalid(
            "pretraining requires a non-empty, force-labeled source dataset",
        ));
    }
    let normalization = NormalizationSpec::from_labels(source.samples.iter().filter_map(|s| s.force.as_ref()))?;
    let data = SourceData::new(source, &normalization, arch.num_classes)?;
    let mut params = ModelParams::init(arch, config.seed)?;
    let trace = run(&mut params, &data, None, &config, "pretrain")?;
    Ok(TrainOutcome {
        model: TrainedModel {
            params,
            normalization,
            metadata: ModelMetadata {
                stage: "pretrain".into(),
                method: "source-only".into(),
                source_domain: single_domain(source),
                target_domain: None,
                transfer: None,
                split_seed: None,
                split_ratios: None,
                config: serde_json::to_value(&config)?,
            },
        },
        trace,
    })
}

/// Adapt a pretrained model to unlabeled target images.
///
/// The model keeps the normalisation of its pretraining stage. Each
/// iteration uses one labeled source batch and one target image batch; the
/// classifier's soft predictions on the target batch act as pseudo labels
/// for the local discrepancy.
pub fn adapt(
    source: &Dataset,
    target: &UnlabeledImages,
    init: &TrainedModel,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    init.params.arch.validate()?;
    if source.is_empty() || !source.is_labeled() {
        return Err(Error::invalid("adaptation requires a force-labeled source dataset"));
    }
    if target.len() < 2 {
        return Err(Error::invalid(format!(
            "adaptation needs at least 2 target images, got {}",
            target.len()
        )));
    }
    let data = SourceData::new(source, &init.normalization, init.params.arch.num_classes)?;
    if data.labels.is_none() && (config.loss_weights.lambda_c > 0.0 || config.loss_weights.lambda_t > 0.0) {
        return Err(Error::invalid("adaptation requires source contact-class labels"));
    }
    let target = target.load_images()?;
    let mut params = init.params.clone();
    let trace = run(&mut params, &data, Some(&target), config, "adapt")?;
    let method = if config.loss_weights.lambda_t > 0.0 {
        method_label(config.transfer).to_string()
    } else {
        "finetune".to_string()
    };
    Ok(TrainOutcome {
        model: TrainedModel {
            params,
            normalization: init.normalization,
            metadata: ModelMetadata {
                stage: "adapt".into(),
                method,
                source_domain: single_domain(source),
                target_domain: target.domain(),
                transfer: Some(config.transfer),
                split_seed: None,
                split_ratios: None,
                config: serde_json::to_value(config)?,
            },
        },
        trace,
    })
}
