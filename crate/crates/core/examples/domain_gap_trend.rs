//! Source-only error of one pretrained model on targets that differ from the
//! source in one, two and three sensor properties.
//!
//! ```text
//! cargo run --release --example domain_gap_trend
//! cargo run --release --example domain_gap_trend -- --medium --seeds 1,2,3
//! ```

use clap::Parser;
use tactile_da::experiment::{build_target, median, pretrain, source_only_report, ExperimentConfig, TargetSpec};
use tactile_da::sim::DomainConfig;

#[derive(Parser)]
struct Args {
    #[arg(long)]
    medium: bool,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
}

fn main() -> tactile_da::Result<()> {
    let a = Args::parse();
    let cfg = if a.medium {
        ExperimentConfig::default()
    } else {
        ExperimentConfig::quick()
    };
    let groups = [
        ("markers removed", TargetSpec::Inpainted),
        (
            "illumination + elastomer",
            TargetSpec::Rendered(DomainConfig::new(true, 1, 1)?),
        ),
        ("all three", TargetSpec::Rendered(DomainConfig::new(false, 1, 1)?)),
    ];
    let mut mae = vec![Vec::new(); groups.len()];
    for &seed in &a.seeds {
        let pre = pretrain(&cfg, seed)?;
        for (g, (_, spec)) in groups.iter().enumerate() {
            let target = build_target(&cfg, &pre, *spec)?;
            mae[g].push(source_only_report(&cfg, &pre, &target)?.avg_mae);
        }
    }
    for ((name, spec), m) in groups.iter().zip(&mae) {
        let gap = cfg.source.gap(&spec.domain(cfg.source));
        println!("gap {gap}, {name:<26} median source-only MAE {:.4} N", median(m)?);
    }
    Ok(())
}
