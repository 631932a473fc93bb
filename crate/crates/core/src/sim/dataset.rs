//! In-memory tactile datasets and the synthetic generator.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::domain::DomainConfig;
use crate::sim::force::{contact_force, ForceLabel};
use crate::sim::image::Image;
use crate::sim::inpaint::inpaint_markers;
use crate::sim::path::{depth_sequence, onehot, ContactPoint, PathSpec};
use crate::sim::render::{detect_marker_mask, stream_seed, RenderConfig, Renderer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            _ => Err(Error::invalid(format!("unknown split {s:?}"))),
        }
    }
}

/// Where an image lives: already decoded, or on disk and decoded on demand.
#[derive(Debug, Clone)]
pub enum ImageRef {
    Memory(Arc<Image>),
    File(PathBuf),
}

impl ImageRef {
    pub fn load(&self) -> Result<Arc<Image>> {
        match self {
            ImageRef::Memory(img) => Ok(Arc::clone(img)),
            ImageRef::File(path) => Ok(Arc::new(Image::load_png(path)?)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TactileSample {
    pub id: String,
    pub contact: ImageRef,
    pub reference: ImageRef,
    pub force: Option<ForceLabel>,
    pub class_index: Option<usize>,
    pub domain: DomainConfig,
    pub split: Option<Split>,
    pub seed: u64,
}

impl TactileSample {
    pub fn class_onehot(&self, num_classes: usize) -> Option<Result<Vec<f64>>> {
        self.class_index.map(|c| onehot(c, num_classes))
    }

    pub fn is_labeled(&self) -> bool {
        self.force.is_some()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<TactileSample>,
    /// Path that generated the data, when known.
    pub spec: Option<PathSpec>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(TactileSample::is_labeled)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            spec: self.spec.clone(),
        }
    }

    pub fn with_split(&self, split: Split) -> Dataset {
        Dataset {
            samples: self
                .samples
                .iter()
                .filter(|s| s.split == Some(split))
                .cloned()
                .collect(),
            spec: self.spec.clone(),
        }
    }

    /// Copy with every label removed.
    pub fn without_labels(&self) -> Dataset {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.force = None;
            s.class_index = None;
        }
        out
    }

    /// Decode every file-backed image once, sharing repeated references.
    pub fn load_images(&self) -> Result<Dataset> {
        let mut cache: HashMap<PathBuf, Arc<Image>> = HashMap::new();
        let mut fetch = |r: &ImageRef| -> Result<ImageRef> {
            Ok(match r {
                ImageRef::Memory(_) => r.clone(),
                ImageRef::File(p) => {
                    if let Some(img) = cache.get(p) {
                        ImageRef::Memory(Arc::clone(img))
                    } else {
                        let img = r.load()?;
                        cache.insert(p.clone(), Arc::clone(&img));
                        ImageRef::Memory(img)
                    }
                }
            })
        };
        let mut out = self.clone();
        for s in &mut out.samples {
            s.contact = fetch(&s.contact)?;
            s.reference = fetch(&s.reference)?;
        }
        Ok(out)
    }

    pub fn domains(&self) -> Vec<DomainConfig> {
        let mut v: Vec<DomainConfig> = Vec::new();
        for s in &self.samples {
            if !v.contains(&s.domain) {
                v.push(s.domain);
            }
        }
        v
    }
}

/// Stream index offset reserved for reference images.
const REFERENCE_STREAM: u64 = 1 << 40;

pub fn generate_dataset(domain: DomainConfig, spec: &PathSpec, seed: u64, labeled: bool) -> Result<Dataset> {
    generate_dataset_with(domain, spec, seed, labeled, &RenderConfig::default())
}

/// One sample per contact point of `spec`. Sample `i` draws its pixel noise
/// from stream `(seed, i)`; the reference image of each surface point is
/// rendered once and shared.
pub fn generate_dataset_with(
    domain: DomainConfig,
    spec: &PathSpec,
    seed: u64,
    labeled: bool,
    render: &RenderConfig,
) -> Result<Dataset> {
    domain.validate()?;
    spec.validate()?;
    let renderer = Renderer::new(render, spec);
    let max_r = spec.max_radius_mm();
    let mut samples = Vec::with_capacity(spec.total_points());
    for s in 0..spec.num_surface_points() {
        let seq = depth_sequence(spec, s);
        let reference = Arc::new(renderer.render(&seq[0], &domain, stream_seed(seed, REFERENCE_STREAM + s as u64)));
        for p in seq {
            let index = samples.len();
            let contact = Arc::new(renderer.render(&p, &domain, stream_seed(seed, index as u64)));
            let (force, class_index) = if labeled {
                (Some(label_for(&p, &domain, max_r)?), Some(p.class_index))
            } else {
                (None, None)
            };
            samples.push(TactileSample {
                id: format!("{index:06}"),
                contact: ImageRef::Memory(contact),
                reference: ImageRef::Memory(Arc::clone(&reference)),
                force,
                class_index,
                domain,
                split: None,
                seed,
            });
        }
    }
    Ok(Dataset {
        samples,
        spec: Some(spec.clone()),
    })
}

fn label_for(p: &ContactPoint, domain: &DomainConfig, max_r: f64) -> Result<ForceLabel> {
    contact_force(p.depth, p.lateral, domain.elastomer_index, max_r)
}

/// Remove markers from every image by detection and harmonic fill, and tag the
/// samples as marker-free. Labels are kept; images are decoded as needed.
pub fn inpaint_dataset(dataset: &Dataset, marker_threshold: f64) -> Result<Dataset> {
    let mut done: HashMap<*const Image, Arc<Image>> = HashMap::new();
    let mut process = |r: &ImageRef| -> Result<ImageRef> {
        let img = r.load()?;
        let key = Arc::as_ptr(&img);
        if let Some(out) = done.get(&key) {
            return Ok(ImageRef::Memory(Arc::clone(out)));
        }
        let mask = detect_marker_mask(&img, marker_threshold);
        let out = Arc::new(inpaint_markers(&img, &mask)?);
        if matches!(r, ImageRef::Memory(_)) {
            done.insert(key, Arc::clone(&out));
        }
        Ok(ImageRef::Memory(out))
    };
    let mut out = dataset.clone();
    for s in &mut out.samples {
        s.contact = process(&s.contact)?;
        s.reference = process(&s.reference)?;
        s.domain.markers = false;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::force::FRICTION_COEFFICIENT;

    fn tiny_spec() -> PathSpec {
        PathSpec {
            grid_nx: 2,
            grid_ny: 1,
            depths_mm: vec![0.5, 1.0],
            radii_mm: vec![0.3, 0.6],
            n_angles: 4,
            ..PathSpec::default()
        }
    }

    #[test]
    fn sparse_dataset_size() {
        let d = generate_dataset(DomainConfig::new(false, 2, 2).unwrap(), &PathSpec::sparse(), 1, true).unwrap();
        assert_eq!(d.len(), 441);
    }

    #[test]
    fn labels_follow_flag() {
        let dom = DomainConfig::new(true, 0, 0).unwrap();
        let d = generate_dataset(dom, &tiny_spec(), 3, false).unwrap();
        assert!(d.samples.iter().all(|s| s.force.is_none() && s.class_index.is_none()));
        let d = generate_dataset(dom, &tiny_spec(), 3, true).unwrap();
        assert!(d.is_labeled());
        for s in &d.samples {
            let f = s.force.unwrap();
            assert!(f.fz <= 0.0 && f.fz >= -3.0 - 1e-12);
            assert!(f.shear_magnitude() <= FRICTION_COEFFICIENT * f.fz.abs() + 1e-12);
            let oh = s.class_onehot(tiny_spec().num_classes()).unwrap().unwrap();
            assert_eq!(oh.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn reference_shared_per_surface_point() {
        let d = generate_dataset(DomainConfig::new(true, 0, 0).unwrap(), &tiny_spec(), 3, true).unwrap();
        let n = tiny_spec().points_per_surface();
        let ptr = |s: &TactileSample| match &s.reference {
            ImageRef::Memory(a) => Arc::as_ptr(a),
            ImageRef::File(_) => unreachable!(),
        };
        assert_eq!(ptr(&d.samples[0]), ptr(&d.samples[n - 1]));
        assert_ne!(ptr(&d.samples[0]), ptr(&d.samples[n]));
    }

    #[test]
    fn deterministic() {
        let dom = DomainConfig::new(true, 1, 1).unwrap();
        let a = generate_dataset(dom, &tiny_spec(), 11, true).unwrap();
        let b = generate_dataset(dom, &tiny_spec(), 11, true).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(*x.contact.load().unwrap(), *y.contact.load().unwrap());
            assert_eq!(x.force, y.force);
        }
    }

    #[test]
    fn inpainted_dataset_is_marker_free() {
        let dom = DomainConfig::new(true, 0, 0).unwrap();
        let cfg = RenderConfig::default();
        let d = generate_dataset(dom, &tiny_spec(), 2, true).unwrap();
        let w = inpaint_dataset(&d, cfg.marker_threshold).unwrap();
        for (a, b) in d.samples.iter().zip(&w.samples) {
            assert!(!b.domain.markers);
            assert_eq!(a.force, b.force);
            let img = b.contact.load().unwrap();
            assert_eq!(detect_marker_mask(&img, cfg.marker_threshold).count(), 0);
        }
    }
}
