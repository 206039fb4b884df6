//! `tumorsynth` command line: batch workflows over CSV manifests and the
//! reader-study HTTP service.

pub mod cmd;
pub mod config;
pub mod error;
pub mod manifest;
pub mod record;
pub mod server;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{CommandFactory, Parser, Subcommand};
use tumorsynth_core::cohortstats::TumorType;
use tumorsynth_core::detect_eval::Connectivity;
use tumorsynth_core::turing::SliceSelection;

use config::{Overrides, RunConfig};
use error::{CliError, CliResult, ErrorReport};

#[derive(Debug, Parser)]
#[command(
    name = "tumorsynth",
    version,
    about = "Statistical tumor synthesis and detection evaluation for CT"
)]
pub struct Cli {
    /// JSON config file.
    #[arg(long, global = true, env = "TUMORSYNTH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Master seed (default 0).
    #[arg(long, global = true, env = "TUMORSYNTH_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 0 = all cores (default 0).
    #[arg(long, global = true, env = "TUMORSYNTH_JOBS")]
    pub jobs: Option<usize>,
    /// Output directory (default ./out).
    #[arg(long, global = true, env = "TUMORSYNTH_OUT")]
    pub out: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a tumor stats model from an annotated cohort.
    FitStats(FitStatsArgs),
    /// Insert synthetic tumors into healthy scans.
    Synthesize(SynthesizeArgs),
    /// FROC, Dice and radius-stratified sensitivity of predictions.
    Evaluate(EvaluateArgs),
    /// Render the slice set of a reader study to PNG.
    TuringExport(TuringExportArgs),
    /// Run the reader-study HTTP service.
    Serve(ServeArgs),
    /// Write procedural phantom scans and manifests.
    Phantom(PhantomArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FitStats(_) => "fit-stats",
            Command::Synthesize(_) => "synthesize",
            Command::Evaluate(_) => "evaluate",
            Command::TuringExport(_) => "turing-export",
            Command::Serve(_) => "serve",
            Command::Phantom(_) => "phantom",
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct FitStatsArgs {
    /// CSV with columns case_id,image,pancreas_mask,tumor_mask.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub radius_mm: Option<f64>,
    #[arg(long)]
    pub tumor_type: Option<TumorType>,
}

#[derive(Debug, clap::Args)]
pub struct SynthesizeArgs {
    /// CSV with columns case_id,image,pancreas_mask[,lesion_mask].
    #[arg(long)]
    pub manifest: PathBuf,
    /// Stats model JSON from fit-stats.
    #[arg(long)]
    pub model: PathBuf,
    /// Synthetic images per healthy case.
    #[arg(long)]
    pub variants: Option<usize>,
    /// Tumors per synthetic image.
    #[arg(long)]
    pub tumors: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    /// CSV with columns case_id,pred_mask[,score_map].
    #[arg(long)]
    pub pred: PathBuf,
    /// CSV with columns case_id,gt_mask.
    #[arg(long)]
    pub gt: PathBuf,
    /// Comma-separated FP-per-subject targets.
    #[arg(long, value_delimiter = ',')]
    pub fp_targets: Option<Vec<f64>>,
    /// Comma-separated ascending radius bin edges in mm.
    #[arg(long, value_delimiter = ',')]
    pub radius_edges: Option<Vec<f64>>,
    /// FP target whose threshold the radius table uses.
    #[arg(long)]
    pub radius_fp_target: Option<f64>,
    /// Count subjects instead of tumors.
    #[arg(long)]
    pub per_subject: bool,
    /// 6 or 26.
    #[arg(long)]
    pub connectivity: Option<Connectivity>,
    /// Require IoU >= this instead of any overlap.
    #[arg(long)]
    pub iou: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct TuringExportArgs {
    /// CSV with columns case_id,image,mask of real tumors.
    #[arg(long)]
    pub real: PathBuf,
    /// Same columns for synthetic tumors.
    #[arg(long)]
    pub synth: PathBuf,
    #[arg(long)]
    pub n_per_class: Option<usize>,
    /// Draw the tumor outline.
    #[arg(long)]
    pub overlay: bool,
    #[arg(long, value_parser = parse_selection)]
    pub slice_selection: Option<SliceSelection>,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long, env = "TUMORSYNTH_REAL_MANIFEST")]
    pub real: Option<PathBuf>,
    #[arg(long, env = "TUMORSYNTH_SYNTH_MANIFEST")]
    pub synth: Option<PathBuf>,
    /// Listen address, e.g. 127.0.0.1:8080.
    #[arg(long, env = "TUMORSYNTH_ADDR")]
    pub addr: Option<String>,
    /// Directory of session event logs.
    #[arg(long, env = "TUMORSYNTH_SESSIONS_DIR")]
    pub sessions_dir: Option<PathBuf>,
    /// Reader UI bundle served at /.
    #[arg(long, env = "TUMORSYNTH_UI_DIR")]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct PhantomArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// 32^3 at 1 mm instead of 64^3 at 2 mm.
    #[arg(long)]
    pub small: bool,
    #[arg(long, default_value_t = 0.0)]
    pub noise_hu: f64,
    /// Draw each case's pancreas HU uniformly from 90 +- this value.
    #[arg(long, default_value_t = 0.0)]
    pub hu_jitter: f64,
    /// Also write a spherical lesion of this radius and a cohort manifest.
    #[arg(long)]
    pub lesion_radius_mm: Option<f64>,
    /// Draw each lesion radius uniformly from the base radius +- this value.
    #[arg(long, default_value_t = 0.0, requires = "lesion_radius_mm")]
    pub radius_jitter_mm: f64,
}

fn parse_selection(s: &str) -> Result<SliceSelection, String> {
    match s {
        "max_area" | "max-area" => Ok(SliceSelection::MaxArea),
        "random" => Ok(SliceSelection::Random),
        _ => Err(format!("expected max_area or random, got {s:?}")),
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code:
/// 0 on success, 2 for invalid arguments, 1 for anything else.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if cli.command.is_none() && !cli.print_config {
        let e = Cli::command().error(clap::error::ErrorKind::MissingSubcommand, "a subcommand is required");
        let _ = e.print();
        return e.exit_code();
    }
    let name = cli.command.as_ref().map(Command::name);
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let report = ErrorReport {
                error: e.kind(),
                message: e.to_string(),
                command: name,
                exit_code: 1,
            };
            eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
            1
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let overrides = Overrides {
        seed: cli.seed,
        jobs: cli.jobs,
        out: cli.out.clone(),
    };
    let cfg = RunConfig::resolve(cli.config.as_deref(), &overrides)?;
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    match cli.command.expect("checked above") {
        Command::FitStats(a) => pool.install(|| cmd::fit_stats::run(&cfg, &a)),
        Command::Synthesize(a) => pool.install(|| cmd::synthesize::run(&cfg, &a)),
        Command::Evaluate(a) => pool.install(|| cmd::evaluate::run(&cfg, &a)),
        Command::TuringExport(a) => pool.install(|| cmd::turing_export::run(&cfg, &a)),
        Command::Phantom(a) => cmd::phantom::run(&cfg, &a),
        Command::Serve(a) => server::run(&cfg, &a),
    }
}

/// Collects per-case outcomes, failing the batch if any case failed.
pub(crate) fn batch<T>(results: Vec<(String, CliResult<T>)>) -> CliResult<Vec<T>> {
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    let mut errors = Vec::new();
    for (case, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => errors.push(format!("{case}: {e}")),
        }
    }
    match errors.first() {
        None => Ok(ok),
        Some(first) => Err(CliError::Batch {
            failed: errors.len(),
            total,
            first: first.clone(),
        }),
    }
}
