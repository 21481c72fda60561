use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cauchy_cli::error::exit;
use cauchy_cli::{check, overlay_toml, pipeline, preset, CliError, CliResult, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

/// Reconstruct harmonic functions from partial Cauchy data and map where the
/// reconstruction can be trusted.
#[derive(Parser)]
#[command(name = "cauchy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct once and write fields, heatmaps and a summary.
    Run(Common),
    /// Indicate functions for every configured Γ set.
    Tau(Common),
    /// Noise-level sweep: probe rate fits, rank correlation, seminorm trend.
    Sweep(Common),
    /// Run the invariant suite.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file; its keys override the preset (or the defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Starting configuration: one-side, two-sides or quick.
    #[arg(long)]
    preset: Option<String>,
    /// Noise seed (overrides `noise_seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel solves.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(common: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.preset {
        Some(name) => preset(name)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        cfg = overlay_toml(&cfg, &text)?;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.noise_seed = seed;
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> CliResult<()> {
    let (common, which) = match &cli.command {
        Command::Run(c) => (c, "run"),
        Command::Tau(c) => (c, "tau"),
        Command::Sweep(c) => (c, "sweep"),
        Command::Check(c) => (c, "check"),
    };
    let cfg = load(common)?;
    let out: &Path = &cfg.out_dir;
    match which {
        "run" => {
            let o = pipeline::run(&cfg, out)?;
            let s = &o.summary;
            println!(
                "n = {}, α = {:.4e}, max error = {:.4e} (relative {:.4e}), τ(center) = {}",
                s.n_basis,
                s.reconstruction.alpha_used,
                s.max_error,
                s.max_relative_error,
                s.tau_center.map_or("n/a".into(), |t| format!("{t:.4}"))
            );
        }
        "tau" => {
            for p in pipeline::tau(&cfg, out)?.panels {
                println!(
                    "{:<20} τ(center) = {}  reliable fraction = {:.4}",
                    p.label,
                    p.tau_center.map_or("n/a".into(), |t| format!("{t:.4}")),
                    p.reliable_fraction
                );
            }
        }
        "sweep" => {
            let s = pipeline::sweep(&cfg, out)?;
            for p in &s.probes {
                println!("x = {:.4} y = {:.4} τ = {:.3} slope = {:.3}", p.x, p.y, p.tau, p.slope);
            }
            println!(
                "spearman = {}, seminorm slope = {:.3}",
                s.spearman.map_or("n/a".into(), |r| format!("{r:.3}")),
                s.reg_norm_slope
            );
        }
        _ => {
            for r in check::check(&cfg, out)? {
                println!("PASS {}: {}", r.name, r.detail);
            }
        }
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            let report = serde_json::json!({ "error": e.report() });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
