//! Command-line front end: configure and launch runs, resume snapshots, and
//! drive the canned experiments.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use nsf::config::RunConfig;
use nsf::experiments::{self, ExperimentKind};
use nsf::runner;

#[derive(Parser)]
#[command(
    name = "nsf",
    version,
    about = "Staggered-grid simulator for heat-conducting variable-density incompressible flow"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Path to a key = value configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configured one and NSF_OUT_ROOT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks the machine default.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Single-threaded, bitwise-reproducible execution.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Start the configured scenario from time zero.
    Run,
    /// Continue a snapshot to the configured end time.
    Resume { snapshot: PathBuf },
    /// Run a named study: decay, split, contraction, mms or smallness.
    Experiment { name: String },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if cli.deterministic {
        cfg.deterministic = true;
    }
    if cfg.deterministic {
        cfg.workers = 1;
    }
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()?;
    }
    // Relative output directories land under NSF_OUT_ROOT when it is set.
    let out = cli.out.clone().unwrap_or_else(|| {
        std::env::var_os("NSF_OUT_ROOT")
            .map(PathBuf::from)
            .unwrap_or_default()
            .join(&cfg.output_dir)
    });

    match cli.cmd {
        Cmd::Run => {
            let summary = runner::run(&cfg, Some(&out))?;
            report(&summary, "run", &out);
        }
        Cmd::Resume { snapshot } => {
            let summary = runner::resume(&snapshot, &cfg, Some(&out))?;
            report(&summary, "resume", &out);
        }
        Cmd::Experiment { name } => {
            let kind: ExperimentKind = name.parse()?;
            let text = experiments::run_experiment(kind, &cfg, Some(&out))?;
            print!("{text}");
            println!("experiment files in {}", out.display());
        }
    }
    Ok(())
}

fn report(summary: &runner::RunSummary, what: &str, out: &std::path::Path) {
    println!(
        "{what}: {} steps to t = {:.6}; {} ledger rows, {} snapshots in {}",
        summary.steps,
        summary.final_state.time,
        summary.rows.len(),
        summary.snapshots.len(),
        out.display()
    );
    if let Some(row) = summary.rows.last() {
        println!(
            "{what}: mass = {:.12e}, total energy = {:.12e}, min theta = {:.6}",
            row.mass, row.total, row.min_theta
        );
    }
}
