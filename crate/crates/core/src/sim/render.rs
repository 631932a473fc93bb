//! Procedural tactile image renderer.
//!
//! A contact is drawn as a Gaussian brightness bump centred at the contact
//! position shifted by the lateral displacement, tinted by the illumination
//! condition. Marker sensors overlay a regular grid of dark anti-aliased
//! disks; markers close to the contact follow the gel's lateral motion.
//! Pixel noise is i.i.d. Gaussian and driven by a per-sample seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::sim::domain::DomainConfig;
use crate::sim::image::{Image, Mask, CHANNELS};
use crate::sim::path::{ContactPoint, PathSpec};

/// Per-channel background level and bump gain of one illumination condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Illumination {
    pub base: [f64; CHANNELS],
    pub gain: [f64; CHANNELS],
}

pub const ILLUMINATIONS: [Illumination; 3] = [
    Illumination {
        base: [0.30, 0.33, 0.36],
        gain: [0.80, 0.55, 0.35],
    },
    Illumination {
        base: [0.42, 0.30, 0.26],
        gain: [0.45, 0.75, 0.60],
    },
    Illumination {
        base: [0.26, 0.40, 0.32],
        gain: [0.55, 0.40, 0.85],
    },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub height: usize,
    pub width: usize,
    /// Bump brightness per mm of depth, before channel gain.
    pub bump_amplitude: f64,
    pub bump_sigma_mm: f64,
    pub noise_sigma: f64,
    pub marker_cols: usize,
    pub marker_rows: usize,
    pub marker_radius_px: f64,
    pub marker_level: f64,
    /// Fraction of the lateral displacement followed by nearby markers.
    pub marker_shift_factor: f64,
    /// Mean-over-channels intensity below which a pixel counts as marker.
    pub marker_threshold: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            height: 64,
            width: 64,
            bump_amplitude: 0.5,
            bump_sigma_mm: 1.0,
            noise_sigma: 0.01,
            marker_cols: 8,
            marker_rows: 6,
            marker_radius_px: 2.0,
            marker_level: 0.05,
            marker_shift_factor: 0.8,
            marker_threshold: 0.18,
        }
    }
}

impl RenderConfig {
    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self
    }
}

/// Derive an independent stream seed from a dataset seed and a stream index.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Renderer<'a> {
    pub config: &'a RenderConfig,
    pub spec: &'a PathSpec,
}

impl<'a> Renderer<'a> {
    pub fn new(config: &'a RenderConfig, spec: &'a PathSpec) -> Self {
        Renderer { config, spec }
    }

    fn px_per_mm(&self) -> (f64, f64) {
        (
            self.config.width as f64 / self.spec.surface_w_mm,
            self.config.height as f64 / self.spec.surface_h_mm,
        )
    }

    /// Marker centres in mm after the gel displacement caused by `point`.
    pub fn marker_centres(&self, point: &ContactPoint) -> Vec<[f64; 2]> {
        let cfg = self.config;
        let bump = self.bump_centre(point);
        let reach = 2.0 * cfg.bump_sigma_mm;
        let mut out = Vec::with_capacity(cfg.marker_cols * cfg.marker_rows);
        for j in 0..cfg.marker_rows {
            for i in 0..cfg.marker_cols {
                let mut m = [
                    (i as f64 + 0.5) * self.spec.surface_w_mm / cfg.marker_cols as f64,
                    (j as f64 + 0.5) * self.spec.surface_h_mm / cfg.marker_rows as f64,
                ];
                if point.depth > 0.0 && (m[0] - bump[0]).hypot(m[1] - bump[1]) < reach {
                    m[0] += cfg.marker_shift_factor * point.lateral[0];
                    m[1] += cfg.marker_shift_factor * point.lateral[1];
                }
                out.push(m);
            }
        }
        out
    }

    fn bump_centre(&self, point: &ContactPoint) -> [f64; 2] {
        [
            point.surface_xy[0] + point.lateral[0],
            point.surface_xy[1] + point.lateral[1],
        ]
    }

    /// Render the noise-free image and the marker coverage of each pixel.
    fn render_clean(&self, point: &ContactPoint, domain: &DomainConfig) -> (Vec<f64>, Vec<f64>) {
        let cfg = self.config;
        let (h, w) = (cfg.height, cfg.width);
        let (sx, sy) = self.px_per_mm();
        let illum = &ILLUMINATIONS[domain.illumination_index as usize];
        let bump = self.bump_centre(point);
        let amp = cfg.bump_amplitude * point.depth;
        let inv_two_sigma2 = 1.0 / (2.0 * cfg.bump_sigma_mm * cfg.bump_sigma_mm);

        let mut img = vec![0.0; h * w * CHANNELS];
        for r in 0..h {
            let y = (r as f64 + 0.5) / sy;
            for c in 0..w {
                let x = (c as f64 + 0.5) / sx;
                let g = if amp > 0.0 {
                    let d2 = (x - bump[0]).powi(2) + (y - bump[1]).powi(2);
                    amp * (-d2 * inv_two_sigma2).exp()
                } else {
                    0.0
                };
                let base = (r * w + c) * CHANNELS;
                for ch in 0..CHANNELS {
                    img[base + ch] = illum.base[ch] + g * illum.gain[ch];
                }
            }
        }

        let mut coverage = vec![0.0; h * w];
        if domain.markers {
            let rad = cfg.marker_radius_px;
            for m in self.marker_centres(point) {
                let (mc, mr) = (m[0] * sx, m[1] * sy);
                let r0 = ((mr - rad - 1.0).floor().max(0.0)) as usize;
                let r1 = ((mr + rad + 1.0).ceil().min(h as f64)) as usize;
                let c0 = ((mc - rad - 1.0).floor().max(0.0)) as usize;
                let c1 = ((mc + rad + 1.0).ceil().min(w as f64)) as usize;
                for r in r0..r1 {
                    for c in c0..c1 {
                        let d = (c as f64 + 0.5 - mc).hypot(r as f64 + 0.5 - mr);
                        let cov = (rad + 0.5 - d).clamp(0.0, 1.0);
                        let slot = &mut coverage[r * w + c];
                        *slot = f64::max(*slot, cov);
                    }
                }
            }
            for (p, &cov) in coverage.iter().enumerate() {
                if cov > 0.0 {
                    for ch in 0..CHANNELS {
                        let v = &mut img[p * CHANNELS + ch];
                        *v = (1.0 - cov) * *v + cov * cfg.marker_level;
                    }
                }
            }
        }
        (img, coverage)
    }

    /// Render one tactile image. `seed` drives the pixel noise only.
    pub fn render(&self, point: &ContactPoint, domain: &DomainConfig, seed: u64) -> Image {
        self.render_with_mask(point, domain, seed).0
    }

    /// Render and also return the exact set of pixels touched by markers.
    pub fn render_with_mask(&self, point: &ContactPoint, domain: &DomainConfig, seed: u64) -> (Image, Mask) {
        let cfg = self.config;
        let (img, coverage) = self.render_clean(point, domain);
        let mut data: Vec<f32> = Vec::with_capacity(img.len());
        if cfg.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, cfg.noise_sigma).expect("finite noise sigma");
            for v in img {
                data.push((v + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32);
            }
        } else {
            data.extend(img.into_iter().map(|v| v.clamp(0.0, 1.0) as f32));
        }
        let mask = Mask {
            height: cfg.height,
            width: cfg.width,
            data: coverage.iter().map(|&c| c > 0.0).collect(),
        };
        (
            Image {
                height: cfg.height,
                width: cfg.width,
                data,
            },
            mask,
        )
    }
}

/// Threshold-and-dilate marker detection, for images whose marker layout is
/// not known (e.g. loaded from disk).
pub fn detect_marker_mask(image: &Image, threshold: f64) -> Mask {
    let data = image
        .data
        .chunks_exact(CHANNELS)
        .map(|px| px.iter().map(|&v| v as f64).sum::<f64>() / CHANNELS as f64 <= threshold)
        .collect();
    Mask {
        height: image.height,
        width: image.width,
        data,
    }
    .dilate()
}
