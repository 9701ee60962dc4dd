use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jostlab_harness::config::{RunConfig, Task};
use jostlab_harness::report::{self, Format};

#[derive(Parser)]
#[command(
    name = "jostlab",
    version,
    about = "Spectra, trace identities and operator bounds for half-line Schrodinger operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML, or JSON starting with '{').
    #[arg(long, global = true, default_value = "configs/default.toml")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// json writes report.json, theorem.csv and constants.json; csv adds
    /// checks.csv and zeros.csv.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Also write k-plane and λ-plane SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every tolerance except theorem_spread.
    #[arg(long, global = true)]
    tol_scale: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Zeros of a(k) and the disk bound.
    Spectrum,
    /// Trace identity on the contour of radius 2∫|V|.
    Trace,
    /// Schatten-norm and determinant bounds.
    Bounds,
    /// Eigenvalue-sum table.
    Theorem,
    /// Every task listed in the configuration.
    All,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = cli.tol_scale {
        if !(s.is_finite() && s > 0.0) {
            eprintln!("config error: --tol-scale must be positive, got {s}");
            return ExitCode::from(2);
        }
        cfg.tolerances = cfg.tolerances.scaled(s);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let only = match cli.command {
        Command::Spectrum => Some(Task::Spectrum),
        Command::Trace => Some(Task::Trace),
        Command::Bounds => Some(Task::Bounds),
        Command::Theorem => Some(Task::Theorem),
        Command::All => None,
    };
    if let Some(t) = only {
        cfg.tasks = vec![t];
    }
    let report = match jostlab_harness::execute(&cfg, &cli.out, cli.format, cli.svg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(3);
        }
    };
    let _ = report::print_summary(&report, &mut std::io::stderr());
    ExitCode::from(report.exit_code() as u8)
}
