//! Adapt a pretrained model to a marker-free sensor without target labels.
//!
//! The target images are the source images with markers inpainted away; the
//! target force labels are only read when scoring the test split.
//!
//! ```text
//! cargo run --release --example adapt_lmmd
//! cargo run --release --example adapt_lmmd -- --medium --seed 2
//! ```

use clap::Parser;
use tactile_da::experiment::{build_target, pretrain, run_adaptation, ExperimentConfig, TargetSpec};
use tactile_da::model::TransferKind;

#[derive(Parser)]
struct Args {
    #[arg(long)]
    medium: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> tactile_da::Result<()> {
    let a = Args::parse();
    let cfg = if a.medium {
        ExperimentConfig::default()
    } else {
        ExperimentConfig::quick()
    };
    let pre = pretrain(&cfg, a.seed)?;
    let target = build_target(&cfg, &pre, TargetSpec::Inpainted)?;
    let run = run_adaptation(&cfg, &pre, &target, TransferKind::Lmmd)?;

    for t in &run.trace {
        println!(
            "epoch {:>2}  L_r {:.4}  L_c {:.4}  L_t {:.4}",
            t.epoch, t.l_r, t.l_c, t.l_t
        );
    }
    print!("{}", run.source_only.summary());
    print!("{}", run.adapted.summary());
    println!("adapted / source-only MAE {:.3}", run.mae_ratio());
    println!(
        "feature centroid distance {:.4} -> {:.4}",
        run.centroid_before, run.centroid_after
    );
    Ok(())
}
