//! Dataset directories: `manifest.jsonl`, a `dataset.json` sidecar and PNG
//! images under `images/`.
//!
//! Image paths in the manifest are relative to the manifest's directory.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::sim::dataset::{Dataset, ImageRef, Split, TactileSample};
use crate::sim::domain::DomainConfig;
use crate::sim::force::ForceLabel;
use crate::sim::path::PathSpec;
use crate::train::trainer::UnlabeledImages;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const DATASET_FILE: &str = "dataset.json";
pub const IMAGE_DIR: &str = "images";
pub const DATASET_FORMAT_VERSION: u32 = 1;

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub id: String,
    pub contact_image_path: String,
    pub reference_image_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_index: Option<usize>,
    pub markers: bool,
    pub illumination_index: u8,
    pub elastomer_index: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    pub seed: u64,
}

impl ManifestRecord {
    /// The force label, if the record carries all three components.
    pub fn force(&self) -> Result<Option<ForceLabel>> {
        match (self.fx, self.fy, self.fz) {
            (Some(fx), Some(fy), Some(fz)) => Ok(Some(ForceLabel { fx, fy, fz })),
            (None, None, None) => Ok(None),
            _ => Err(Error::invalid(format!(
                "record {}: fx, fy and fz must be given together or not at all",
                self.id
            ))),
        }
    }

    pub fn domain(&self) -> Result<DomainConfig> {
        DomainConfig::new(self.markers, self.illumination_index, self.elastomer_index)
            .map_err(|e| Error::invalid(format!("record {}: {e}", self.id)))
    }
}

/// Sidecar describing the whole dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInfo {
    pub format_version: u32,
    pub num_records: usize,
    pub spec: Option<PathSpec>,
}

/// Accept either a dataset directory or the manifest file itself.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Write `dataset` to `dir`: one PNG per distinct image, records sorted by
/// id. Returns the manifest path.
pub fn write_manifest(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    let images = dir.join(IMAGE_DIR);
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;

    let mut order: Vec<&TactileSample> = dataset.samples.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    for w in order.windows(2) {
        if w[0].id == w[1].id {
            return Err(Error::invalid(format!("duplicate sample id {}", w[0].id)));
        }
    }

    // references are shared between samples; write each once
    let mut written: HashMap<ImageKey, String> = HashMap::new();
    let mut lines = String::new();
    for s in order {
        let contact = store_image(&s.contact, format!("{}_contact.png", s.id), dir, &mut written)?;
        let reference = store_image(&s.reference, format!("{}_reference.png", s.id), dir, &mut written)?;
        let rec = ManifestRecord {
            id: s.id.clone(),
            contact_image_path: contact,
            reference_image_path: reference,
            fx: s.force.map(|f| f.fx),
            fy: s.force.map(|f| f.fy),
            fz: s.force.map(|f| f.fz),
            class_index: s.class_index,
            markers: s.domain.markers,
            illumination_index: s.domain.illumination_index,
            elastomer_index: s.domain.elastomer_index,
            split: s.split,
            seed: s.seed,
        };
        lines.push_str(&serde_json::to_string(&rec)?);
        lines.push('\n');
    }
    let info = DatasetInfo {
        format_version: DATASET_FORMAT_VERSION,
        num_records: dataset.len(),
        spec: dataset.spec.clone(),
    };
    let mut sidecar = serde_json::to_string_pretty(&info)?;
    sidecar.push('\n');
    atomic_write(&dir.join(DATASET_FILE), sidecar.as_bytes())?;
    let path = dir.join(MANIFEST_FILE);
    atomic_write(&path, lines.as_bytes())?;
    Ok(path)
}

#[derive(Hash, PartialEq, Eq)]
enum ImageKey {
    Memory(usize),
    File(PathBuf),
}

fn store_image(r: &ImageRef, name: String, dir: &Path, written: &mut HashMap<ImageKey, String>) -> Result<String> {
    let key = match r {
        ImageRef::Memory(a) => ImageKey::Memory(std::sync::Arc::as_ptr(a) as usize),
        ImageRef::File(p) => ImageKey::File(p.clone()),
    };
    if let Some(rel) = written.get(&key) {
        return Ok(rel.clone());
    }
    let rel = format!("{IMAGE_DIR}/{name}");
    r.load()?.save_png(&dir.join(&rel))?;
    written.insert(key, rel.clone());
    Ok(rel)
}

fn parse_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

fn resolve_image(base: &Path, rel: &str, id: &str) -> Result<ImageRef> {
    let p = base.join(rel);
    if !p.is_file() {
        return Err(Error::invalid(format!(
            "record {id}: image file {} not found",
            p.display()
        )));
    }
    Ok(ImageRef::File(p))
}

fn read_info(base: &Path) -> Result<Option<DatasetInfo>> {
    let p = base.join(DATASET_FILE);
    if !p.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let info: DatasetInfo = serde_json::from_str(&text)?;
    if info.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::invalid(format!(
            "{}: unsupported format_version {}",
            p.display(),
            info.format_version
        )));
    }
    Ok(Some(info))
}

/// Read a labeled or unlabeled dataset. Images stay on disk until used.
pub fn read_manifest(path: &Path) -> Result<Dataset> {
    let path = manifest_path(path);
    let base = path.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::new();
    for (line, rec) in parse_lines::<ManifestRecord>(&path)? {
        let bad = |e: Error| Error::Manifest {
            path: path.clone(),
            line,
            message: e.to_string(),
        };
        let force = rec.force().map_err(bad)?;
        let domain = rec.domain().map_err(bad)?;
        samples.push(TactileSample {
            contact: resolve_image(base, &rec.contact_image_path, &rec.id)?,
            reference: resolve_image(base, &rec.reference_image_path, &rec.id)?,
            force,
            class_index: rec.class_index,
            domain,
            split: rec.split,
            seed: rec.seed,
            id: rec.id,
        });
    }
    let spec = read_info(base)?.and_then(|i| i.spec);
    Ok(Dataset { samples, spec })
}

/// A manifest line seen through the images-only reader. Label fields are
/// skipped without being decoded.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageRecord {
    id: String,
    contact_image_path: String,
    reference_image_path: String,
    #[serde(default)]
    #[allow(dead_code)]
    fx: Option<IgnoredAny>,
    #[serde(default)]
    #[allow(dead_code)]
    fy: Option<IgnoredAny>,
    #[serde(default)]
    #[allow(dead_code)]
    fz: Option<IgnoredAny>,
    #[serde(default)]
    #[allow(dead_code)]
    class_index: Option<IgnoredAny>,
    markers: bool,
    illumination_index: u8,
    elastomer_index: u8,
    #[serde(default)]
    split: Option<Split>,
    #[allow(dead_code)]
    seed: u64,
}

/// Target-domain images of a manifest with their split tags. Whatever the
/// label fields contain, they are never parsed.
#[derive(Debug, Clone)]
pub struct TargetImages {
    pub ids: Vec<String>,
    pub splits: Vec<Option<Split>>,
    pub images: UnlabeledImages,
    /// Whether any record carried a label field.
    pub had_labels: bool,
}

impl TargetImages {
    /// Records tagged `split`, or `None` when the manifest carries no tags.
    pub fn tagged(&self, split: Split) -> Option<Vec<usize>> {
        if self.splits.iter().all(Option::is_none) {
            return None;
        }
        Some(
            (0..self.splits.len())
                .filter(|&i| self.splits[i] == Some(split))
                .collect(),
        )
    }
}

pub fn read_target_images(path: &Path) -> Result<TargetImages> {
    let path = manifest_path(path);
    let base = path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let had_labels = text.lines().any(|l| {
        ["\"fx\"", "\"fy\"", "\"fz\"", "\"class_index\""]
            .iter()
            .any(|k| l.contains(k))
    });
    let mut ids = Vec::new();
    let mut splits = Vec::new();
    let mut pairs = Vec::new();
    let mut domains: Vec<DomainConfig> = Vec::new();
    for (line, rec) in parse_lines::<ImageRecord>(&path)? {
        let domain = DomainConfig::new(rec.markers, rec.illumination_index, rec.elastomer_index).map_err(|e| {
            Error::Manifest {
                path: path.clone(),
                line,
                message: e.to_string(),
            }
        })?;
        if !domains.contains(&domain) {
            domains.push(domain);
        }
        pairs.push((
            resolve_image(base, &rec.contact_image_path, &rec.id)?,
            resolve_image(base, &rec.reference_image_path, &rec.id)?,
        ));
        splits.push(rec.split);
        ids.push(rec.id);
    }
    let domain = (domains.len() == 1).then(|| domains[0]);
    Ok(TargetImages {
        ids,
        splits,
        images: UnlabeledImages::from_pairs(pairs, domain),
        had_labels,
    })
}
