//! Pretrain the force model on a labeled marker sensor and print the loss
//! trace.
//!
//! ```text
//! cargo run --release --example pretrain_source
//! cargo run --release --example pretrain_source -- --medium --out /tmp/pre.tdam
//! ```

use std::path::PathBuf;

use clap::Parser;
use tactile_da::experiment::{pretrain, ExperimentConfig};

#[derive(Parser)]
struct Args {
    /// 3x3 surface grid with every contact class (about a minute).
    #[arg(long)]
    medium: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> tactile_da::Result<()> {
    let a = Args::parse();
    let cfg = if a.medium {
        ExperimentConfig::default()
    } else {
        ExperimentConfig::quick()
    };
    let pre = pretrain(&cfg, a.seed)?;
    println!(
        "{} source samples, {} parameters",
        pre.source.len(),
        pre.model.params.num_params()
    );
    for t in &pre.trace {
        println!("epoch {:>2}  L_r {:.5}  eta {:.5}", t.epoch, t.l_r, t.eta);
    }
    if let Some(out) = a.out {
        pre.model.save(&out)?;
        println!("saved {}", out.display());
    }
    Ok(())
}
