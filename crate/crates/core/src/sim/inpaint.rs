//! Marker removal by harmonic diffusion fill.
//!
//! Masked pixels are repeatedly replaced by the mean of their in-image
//! 4-neighbours (Jacobi sweeps) until no pixel would move by more than the
//! tolerance. The converged sweep is not applied, so re-running the fill on
//! its own output is a no-op.

use crate::error::{Error, Result};
use crate::sim::image::{Image, Mask, CHANNELS};

pub const INPAINT_TOLERANCE: f64 = 1e-4;
const MAX_SWEEPS: usize = 200_000;

pub fn inpaint_markers(image: &Image, mask: &Mask) -> Result<Image> {
    if image.height != mask.height || image.width != mask.width {
        return Err(Error::shape(
            "inpaint_markers",
            format!("{}x{}", image.height, image.width),
            format!("{}x{}", mask.height, mask.width),
        ));
    }
    let masked: Vec<usize> = (0..mask.data.len()).filter(|&i| mask.data[i]).collect();
    if masked.is_empty() {
        return Ok(image.clone());
    }
    if masked.len() == mask.data.len() {
        return Err(Error::invalid("inpainting mask covers the entire image"));
    }
    let (h, w) = (image.height, image.width);

    // Working copy in f64; masked pixels start at the mean of the known ones.
    let mut cur: Vec<f64> = image.data.iter().map(|&v| v as f64).collect();
    let mut known_mean = [0.0f64; CHANNELS];
    let n_known = (mask.data.len() - masked.len()) as f64;
    for (p, &m) in mask.data.iter().enumerate() {
        if !m {
            for ch in 0..CHANNELS {
                known_mean[ch] += cur[p * CHANNELS + ch];
            }
        }
    }
    for &p in &masked {
        for ch in 0..CHANNELS {
            cur[p * CHANNELS + ch] = known_mean[ch] / n_known;
        }
    }
    let neighbours: Vec<Vec<usize>> = masked
        .iter()
        .map(|&p| {
            let (r, c) = (p / w, p % w);
            let mut nb = Vec::with_capacity(4);
            if r > 0 {
                nb.push(p - w);
            }
            if r + 1 < h {
                nb.push(p + w);
            }
            if c > 0 {
                nb.push(p - 1);
            }
            if c + 1 < w {
                nb.push(p + 1);
            }
            nb
        })
        .collect();

    let mut next = vec![0.0; masked.len() * CHANNELS];
    for _ in 0..MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for (k, (&p, nb)) in masked.iter().zip(&neighbours).enumerate() {
            for ch in 0..CHANNELS {
                let v = nb.iter().map(|&q| cur[q * CHANNELS + ch]).sum::<f64>() / nb.len() as f64;
                max_change = max_change.max((v - cur[p * CHANNELS + ch]).abs());
                next[k * CHANNELS + ch] = v;
            }
        }
        if max_change < INPAINT_TOLERANCE {
            break;
        }
        for (k, &p) in masked.iter().enumerate() {
            cur[p * CHANNELS..(p + 1) * CHANNELS].copy_from_slice(&next[k * CHANNELS..(k + 1) * CHANNELS]);
        }
    }

    let mut out = image.clone();
    for &p in &masked {
        for ch in 0..CHANNELS {
            out.data[p * CHANNELS + ch] = cur[p * CHANNELS + ch] as f32;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::domain::DomainConfig;
    use crate::sim::path::{depth_sequence, PathSpec};
    use crate::sim::render::{RenderConfig, Renderer};

    #[test]
    fn empty_mask_is_identity() {
        let img = Image::from_data(2, 2, (0..12).map(|v| v as f32 / 12.0).collect()).unwrap();
        assert_eq!(inpaint_markers(&img, &Mask::empty(2, 2)).unwrap(), img);
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = Image::filled(10, 12, 0.37);
        let mut mask = Mask::empty(10, 12);
        for i in [0, 5, 13, 14, 15, 60, 119] {
            mask.data[i] = true;
        }
        assert_eq!(inpaint_markers(&img, &mask).unwrap(), img);
    }

    #[test]
    fn full_mask_rejected() {
        let img = Image::filled(3, 3, 0.5);
        let mask = Mask {
            height: 3,
            width: 3,
            data: vec![true; 9],
        };
        assert!(inpaint_markers(&img, &mask).is_err());
    }

    #[test]
    fn unmasked_pixels_unchanged_and_idempotent() {
        let spec = PathSpec::default();
        let cfg = RenderConfig::default();
        let r = Renderer::new(&cfg, &spec);
        let p = depth_sequence(&spec, 9)[300];
        let (img, mask) = r.render_with_mask(&p, &DomainConfig::new(true, 2, 0).unwrap(), 4);
        let once = inpaint_markers(&img, &mask).unwrap();
        for (i, &m) in mask.data.iter().enumerate() {
            if !m {
                assert_eq!(&once.data[i * 3..i * 3 + 3], &img.data[i * 3..i * 3 + 3]);
            }
        }
        let twice = inpaint_markers(&once, &mask).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn linear_ramp_is_reproduced() {
        // harmonic fill reproduces a function that is harmonic on the grid
        let (h, w) = (9, 9);
        let mut img = Image::new(h, w);
        for r in 0..h {
            for c in 0..w {
                for ch in 0..3 {
                    img.set(r, c, ch, (0.1 + 0.05 * c as f64 + 0.02 * r as f64) as f32);
                }
            }
        }
        let mut mask = Mask::empty(h, w);
        for r in 3..6 {
            for c in 3..6 {
                mask.data[r * w + c] = true;
            }
        }
        let out = inpaint_markers(&img, &mask).unwrap();
        assert!(out.mean_abs_diff(&img) < 1e-4);
    }

    #[test]
    fn fill_approximates_native_marker_free_render() {
        let spec = PathSpec::default();
        let cfg = RenderConfig::default();
        let r = Renderer::new(&cfg, &spec);
        let seq = depth_sequence(&spec, 12);
        let mut worst = 0.0f64;
        for p in seq.iter().step_by(40) {
            let seed = 1000 + p.class_index as u64;
            let (marked, mask) = r.render_with_mask(p, &DomainConfig::new(true, 0, 0).unwrap(), seed);
            let native = r.render(p, &DomainConfig::new(false, 0, 0).unwrap(), seed);
            let filled = inpaint_markers(&marked, &mask).unwrap();
            worst = worst.max(filled.mean_abs_diff(&native));
        }
        assert!(worst < 0.05, "mean L1 {worst}");
    }
}
