//! Remove markers from a rendered contact and compare the result with the
//! same contact rendered on a marker-free sensor.
//!
//! ```text
//! cargo run --release --example inpaint_markers -- --out /tmp/inpaint
//! ```

use std::path::PathBuf;

use clap::Parser;
use tactile_da::sim::path::depth_sequence;
use tactile_da::sim::render::detect_marker_mask;
use tactile_da::sim::{inpaint_markers, DomainConfig, PathSpec, RenderConfig, Renderer};

#[derive(Parser)]
struct Args {
    /// Directory for before/after PNGs.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.18)]
    threshold: f64,
}

fn main() -> tactile_da::Result<()> {
    let a = Args::parse();
    let spec = PathSpec::full();
    let cfg = RenderConfig::default();
    let renderer = Renderer::new(&cfg, &spec);
    let point = depth_sequence(&spec, 14)[360];
    let with = DomainConfig::new(true, 0, 0)?;
    let without = DomainConfig::new(false, 0, 0)?;

    let (img, exact) = renderer.render_with_mask(&point, &with, 1);
    let native = renderer.render(&point, &without, 1);
    let detected = detect_marker_mask(&img, a.threshold);
    let covered = |m: &tactile_da::sim::Mask| m.data.iter().filter(|&&b| b).count();
    println!(
        "marker pixels: exact {}, detected {}",
        covered(&exact),
        covered(&detected)
    );

    let filled = inpaint_markers(&img, &detected)?;
    println!("mean |difference| to the marker-free render");
    println!("  before inpainting {:.4}", img.mean_abs_diff(&native));
    println!("  after inpainting  {:.4}", filled.mean_abs_diff(&native));

    if let Some(dir) = a.out {
        std::fs::create_dir_all(&dir).map_err(|e| tactile_da::Error::io(&dir, e))?;
        img.save_png(&dir.join("markers.png"))?;
        filled.save_png(&dir.join("inpainted.png"))?;
        native.save_png(&dir.join("native.png"))?;
        println!("wrote PNGs to {}", dir.display());
    }
    Ok(())
}
