//! Generate a labeled tactile dataset and write it as a manifest.
//!
//! ```text
//! cargo run --release --example generate_dataset -- --out /tmp/mb0i0
//! cargo run --release --example generate_dataset -- --full --illum 1 --out /tmp/mb0i1
//! ```

use std::path::PathBuf;

use clap::Parser;
use tactile_da::io::write_manifest;
use tactile_da::sim::{generate_dataset, DomainConfig, PathSpec};

#[derive(Parser)]
struct Args {
    #[arg(long)]
    out: Option<PathBuf>,
    /// All 30 surface points instead of the sparse 3x3 grid.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    no_markers: bool,
    #[arg(long, default_value_t = 0)]
    illum: u8,
    #[arg(long, default_value_t = 0)]
    elastomer: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> tactile_da::Result<()> {
    let a = Args::parse();
    let spec = if a.full { PathSpec::full() } else { PathSpec::sparse() };
    let domain = DomainConfig::new(!a.no_markers, a.illum, a.elastomer)?;
    let data = generate_dataset(domain, &spec, a.seed, true)?;

    let forces: Vec<_> = data.samples.iter().filter_map(|s| s.force).collect();
    let min_fz = forces.iter().map(|f| f.fz).fold(0.0, f64::min);
    let max_shear = forces.iter().map(|f| f.shear_magnitude()).fold(0.0, f64::max);
    println!("{domain}: {} samples, {} classes", data.len(), spec.num_classes());
    println!("fz down to {min_fz:.3} N, shear up to {max_shear:.3} N");

    if let Some(out) = a.out {
        let manifest = write_manifest(&data, &out)?;
        println!("wrote {}", manifest.display());
    }
    Ok(())
}
