//! Bottleneck features of source and target before and after adaptation,
//! with a shared 2-D PCA projection written as CSV for plotting.
//!
//! ```text
//! cargo run --release --example export_embeddings -- --out /tmp/emb
//! ```

use std::path::PathBuf;

use clap::Parser;
use tactile_da::eval::export_embeddings;
use tactile_da::experiment::{build_target, pretrain, run_adaptation, target_splits, ExperimentConfig, TargetSpec};
use tactile_da::model::TransferKind;

#[derive(Parser)]
struct Args {
    #[arg(long)]
    medium: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for `before.csv` and `after.csv`.
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
    let target = build_target(&cfg, &pre, TargetSpec::Inpainted)?;
    let run = run_adaptation(&cfg, &pre, &target, TransferKind::Lmmd)?;
    let (_, test) = target_splits(&cfg, &target, a.seed)?;

    for (name, model) in [("before", &pre.model), ("after", &run.model)] {
        let emb = export_embeddings(model, &pre.source, &test)?;
        println!(
            "{name}: {} rows, centroid distance {:.4}",
            emb.domain.len(),
            emb.centroid_distance()?
        );
        if let Some(dir) = &a.out {
            std::fs::create_dir_all(dir).map_err(|e| tactile_da::Error::io(dir, e))?;
            emb.write_csv(&dir.join(format!("{name}.csv")))?;
        }
    }
    Ok(())
}
