//! Source-only, MMD, CORAL and LMMD adaptation side by side on one target.
//!
//! ```text
//! cargo run --release --example compare_methods
//! cargo run --release --example compare_methods -- --target-illum 1 --target-elastomer 1
//! ```

use clap::Parser;
use tactile_da::eval::compare_reports;
use tactile_da::experiment::{build_target, pretrain, run_adaptation, ExperimentConfig, TargetSpec};
use tactile_da::model::TransferKind;
use tactile_da::sim::DomainConfig;

#[derive(Parser)]
struct Args {
    #[arg(long)]
    medium: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Render the target instead of inpainting the source.
    #[arg(long)]
    target_illum: Option<u8>,
    #[arg(long, default_value_t = 0)]
    target_elastomer: u8,
}

fn main() -> tactile_da::Result<()> {
    let a = Args::parse();
    let cfg = if a.medium {
        ExperimentConfig::default()
    } else {
        ExperimentConfig::quick()
    };
    let spec = match a.target_illum {
        Some(i) => TargetSpec::Rendered(DomainConfig::new(false, i, a.target_elastomer)?),
        None => TargetSpec::Inpainted,
    };
    let pre = pretrain(&cfg, a.seed)?;
    let target = build_target(&cfg, &pre, spec)?;
    let mut reports = Vec::new();
    for (i, kind) in [TransferKind::Lmmd, TransferKind::Mmd, TransferKind::Coral]
        .into_iter()
        .enumerate()
    {
        let run = run_adaptation(&cfg, &pre, &target, kind)?;
        if i == 0 {
            reports.push(run.source_only);
        }
        reports.push(run.adapted);
    }
    print!("{}", compare_reports(&reports)?.render_text());
    Ok(())
}
