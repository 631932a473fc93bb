//! The `tactile-da` command line.
//!
//! Every subcommand reads its inputs, writes new files and never touches its
//! inputs. Existing outputs are only replaced with `--force`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::eval::{build_group_report, compare_reports, export_embeddings, GroupReport};
use crate::io::manifest::{read_manifest, read_target_images, write_manifest, MANIFEST_FILE};
use crate::io::{atomic_write, parse_config, RunConfig};
use crate::model::file::TrainedModel;
use crate::model::transfer::TransferKind;
use crate::sim::dataset::{generate_dataset, inpaint_dataset, Dataset, Split};
use crate::sim::domain::DomainConfig;
use crate::sim::path::PathSpec;
use crate::train::split::{split_indices, split_target};
use crate::train::trace::write_trace;
use crate::train::trainer::{adapt, pretrain_source};

#[derive(Debug, Parser)]
#[command(
    name = "tactile-da",
    version,
    about = "Unsupervised force calibration for optical tactile sensors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic tactile dataset.
    Gen(GenArgs),
    /// Remove markers from every image of a dataset.
    Inpaint(InpaintArgs),
    /// Train a model on a labeled source dataset.
    Pretrain(PretrainArgs),
    /// Adapt a pretrained model to unlabeled target images.
    Adapt(AdaptArgs),
    /// Evaluate a model on a labeled target test split.
    Eval(EvalArgs),
    /// Tabulate evaluation reports by method and group.
    Compare(CompareArgs),
    /// Export source and target features with a 2-D PCA projection.
    Embed(EmbedArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathKind {
    /// 6x5 surface grid, 361 contacts per point.
    Full,
    /// 3x3 grid, 49 contacts per point.
    Sparse,
    /// 3x3 grid, 361 contacts per point.
    Medium,
}

impl PathKind {
    pub fn spec(self) -> PathSpec {
        match self {
            PathKind::Full => PathSpec::full(),
            PathKind::Sparse => PathSpec::sparse(),
            PathKind::Medium => crate::experiment::experiment_path(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Sensor with markers.
    #[arg(long)]
    pub markers: bool,
    #[arg(long, default_value_t = 0)]
    pub illum: u8,
    #[arg(long, default_value_t = 0)]
    pub elastomer: u8,
    #[arg(long, value_enum, default_value_t = PathKind::Full)]
    pub path: PathKind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Omit force and class labels.
    #[arg(long)]
    pub unlabeled: bool,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct InpaintArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Mean intensity at or below which a pixel counts as marker.
    #[arg(long, default_value_t = 0.18)]
    pub threshold: f64,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `train.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lmmd,
    Mmd,
    Coral,
}

impl From<MethodArg> for TransferKind {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lmmd => TransferKind::Lmmd,
            MethodArg::Mmd => TransferKind::Mmd,
            MethodArg::Coral => TransferKind::Coral,
        }
    }
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub init: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `adapt.transfer`.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Overrides `adapt.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Split seed for untagged manifests; defaults to the model's, then 0.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Evaluate on every record instead of the test split.
    #[arg(long)]
    pub all_records: bool,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also write the table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

fn guard_file(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::invalid(format!(
            "refusing to overwrite {} (pass --force to replace it)",
            path.display()
        )));
    }
    Ok(())
}

fn guard_dataset_dir(dir: &Path, force: bool) -> Result<()> {
    guard_file(&dir.join(MANIFEST_FILE), force)
}

fn same_location(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    println!("{}", cfg.to_json()?);
    Ok(cfg)
}

/// `model.tdam` -> `model.trace.jsonl`.
pub fn trace_path(model_out: &Path) -> PathBuf {
    let stem = model_out
        .file_stem()
        .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    model_out.with_file_name(format!("{stem}.trace.jsonl"))
}

fn gen(a: &GenArgs) -> Result<()> {
    guard_dataset_dir(&a.out, a.force)?;
    let domain = DomainConfig::new(a.markers, a.illum, a.elastomer)?;
    let spec = a.path.spec();
    let data = generate_dataset(domain, &spec, a.seed, !a.unlabeled)?;
    let manifest = write_manifest(&data, &a.out)?;
    log::info!("wrote {} records of {domain} to {}", data.len(), manifest.display());
    Ok(())
}

fn inpaint(a: &InpaintArgs) -> Result<()> {
    if same_location(&a.input, &a.out) {
        return Err(Error::invalid("inpaint: --out must differ from --in"));
    }
    guard_dataset_dir(&a.out, a.force)?;
    let data = read_manifest(&a.input)?;
    let out = inpaint_dataset(&data, a.threshold)?;
    let manifest = write_manifest(&out, &a.out)?;
    log::info!("inpainted {} records into {}", out.len(), manifest.display());
    Ok(())
}

fn pretrain(a: &PretrainArgs) -> Result<()> {
    guard_file(&a.out, a.force)?;
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.train.seed = s;
    }
    let source = read_manifest(&a.source)?.load_images()?;
    if !cfg.explicit_num_classes {
        if let Some(spec) = &source.spec {
            cfg.model.num_classes = spec.num_classes();
        }
    }
    let out = pretrain_source(&source, &cfg.model, &cfg.train)?;
    let mut model = out.model;
    model.metadata.config = cfg.to_value();
    model.save(&a.out)?;
    write_trace(&trace_path(&a.out), &out.trace)?;
    log::info!("saved {}", a.out.display());
    Ok(())
}

fn adapt_cmd(a: &AdaptArgs) -> Result<()> {
    guard_file(&a.out, a.force)?;
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.adapt.seed = s;
    }
    if let Some(m) = a.method {
        cfg.adapt.transfer = m.into();
    }
    let init = TrainedModel::load(&a.init)?;
    let source = read_manifest(&a.source)?.load_images()?;
    let target = read_target_images(&a.target)?;
    if target.had_labels {
        log::info!("target manifest carries label fields; they are ignored during adaptation");
    }
    let (train, split_seed) = match target.tagged(Split::Train) {
        Some(idx) => (idx, None),
        None => {
            let idx = split_indices(target.images.len(), cfg.data.split_ratios, cfg.data.split_seed)?;
            (idx.train, Some(cfg.data.split_seed))
        }
    };
    log::info!("adapting on {} of {} target images", train.len(), target.images.len());
    let out = adapt(&source, &target.images.subset(&train), &init, &cfg.adapt)?;
    let mut model = out.model;
    model.metadata.split_seed = split_seed;
    model.metadata.split_ratios = split_seed.map(|_| cfg.data.split_ratios);
    model.metadata.config = cfg.to_value();
    model.save(&a.out)?;
    write_trace(&trace_path(&a.out), &out.trace)?;
    log::info!("saved {}", a.out.display());
    Ok(())
}

fn test_split(data: &Dataset, model: &TrainedModel, a: &EvalArgs) -> Result<Dataset> {
    if a.all_records {
        return Ok(data.clone());
    }
    if data.samples.iter().any(|s| s.split.is_some()) {
        return Ok(data.with_split(Split::Test));
    }
    let seed = a.split_seed.or(model.metadata.split_seed).unwrap_or(0);
    let ratios = model.metadata.split_ratios.unwrap_or(crate::train::split::TARGET_SPLIT);
    Ok(split_target(data, ratios, seed)?.2)
}

fn eval(a: &EvalArgs) -> Result<()> {
    guard_file(&a.report, a.force)?;
    let model = TrainedModel::load(&a.model)?;
    let data = read_manifest(&a.target)?;
    let test = test_split(&data, &model, a)?.load_images()?;
    let report = build_group_report(&model, &test)?;
    print!("{}", report.summary());
    let mut json = report.to_json()?;
    json.push('\n');
    atomic_write(&a.report, json.as_bytes())
}

fn compare(a: &CompareArgs) -> Result<()> {
    if let Some(out) = &a.out {
        guard_file(out, a.force)?;
    }
    let reports = a
        .reports
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            GroupReport::from_json(&text).map_err(|e| Error::invalid(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = compare_reports(&reports)?;
    let mut text = match a.format {
        Format::Text => table.render_text(),
        Format::Json => table.to_json()?,
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    print!("{text}");
    if let Some(out) = &a.out {
        atomic_write(out, text.as_bytes())?;
    }
    Ok(())
}

fn embed(a: &EmbedArgs) -> Result<()> {
    guard_file(&a.out, a.force)?;
    let model = TrainedModel::load(&a.model)?;
    let source = read_manifest(&a.source)?.load_images()?;
    let target = read_manifest(&a.target)?.load_images()?;
    let emb = export_embeddings(&model, &source, &target)?;
    emb.write_csv(&a.out)?;
    log::info!(
        "wrote {} rows to {}; centroid distance {:.4}",
        emb.domain.len(),
        a.out.display(),
        emb.centroid_distance()?
    );
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Inpaint(a) => inpaint(a),
        Command::Pretrain(a) => pretrain(a),
        Command::Adapt(a) => adapt_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => compare(a),
        Command::Embed(a) => embed(a),
    }
}

/// Parse `args` and run. Usage errors exit with status 2, runtime errors
/// with 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        assert_eq!(main_with_args(["tactile-da", "train"]), 2);
        assert_eq!(main_with_args(["tactile-da", "gen", "--bogus"]), 2);
    }

    #[test]
    fn trace_sits_next_to_the_model() {
        assert_eq!(trace_path(Path::new("out/m.tdam")), PathBuf::from("out/m.trace.jsonl"));
    }

    #[test]
    fn path_kinds() {
        assert_eq!(PathKind::Full.spec().total_points(), 10_830);
        assert_eq!(PathKind::Sparse.spec().total_points(), 441);
        assert_eq!(PathKind::Medium.spec().total_points(), 3249);
    }
}
