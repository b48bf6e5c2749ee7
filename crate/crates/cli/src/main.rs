use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qrlcs_cli::{
    load_sequence, output_dir, run_compare, run_fit, run_noise_sweep, run_scan, run_train,
    CliError, CliResult, ExperimentConfig, ScanMode,
};

#[derive(Parser)]
#[command(name = "qrlcs", version, about = "Learned critical-probe preparation and sensing scans")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a preparation program at the training size.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Fisher-information scan over the size grid.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Program to replay; exact ground states are used when absent.
        #[arg(long)]
        sequence: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "local_qfi")]
        mode: ScanMode,
    },
    /// Noisy replays over a grid of jitter and crosstalk levels.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sequence: PathBuf,
    },
    /// Learned, adiabatic and non-critical probes side by side.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Program to use; one is trained from the config when absent.
        #[arg(long)]
        sequence: Option<PathBuf>,
    },
    /// Power-law fit of one CSV column against its `l` column.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "value")]
        column: String,
        /// Fit-report JSON path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> CliResult<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    let out = output_dir(&cfg, common.out.as_deref());
    Ok((cfg, out))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--workers: {e}")))?;
    }
    match cli.command {
        Command::Train { common } => {
            let (cfg, out) = load(&common)?;
            let report = run_train(&cfg, &out)?;
            let s = &report.summary;
            println!(
                "L = {}: fidelity {:.6}, depth {}, t_p {:.3} -> {}",
                s.l_train,
                s.fidelity,
                s.depth,
                s.t_p,
                out.display()
            );
            if !s.success {
                return Err(CliError::Unsuccessful { fidelity: s.fidelity });
            }
        }
        Command::Scan { common, sequence, mode } => {
            let (cfg, out) = load(&common)?;
            let seq = sequence.as_deref().map(load_sequence).transpose()?;
            let report = run_scan(&cfg, seq.as_ref(), mode, &out)?;
            for r in &report.rows {
                println!("L = {:>3}  {} = {:.6e}", r.l, r.kind, r.value);
            }
            if let Some(fit) = &report.fit {
                println!("exponent {:.4} (r² {:.5})", fit.exponent, fit.r_squared);
            }
        }
        Command::NoiseSweep { common, sequence } => {
            let (cfg, out) = load(&common)?;
            let seq = load_sequence(&sequence)?;
            let rows = run_noise_sweep(&cfg, &seq, &out)?;
            for r in &rows {
                println!(
                    "sigma {:<6} lambda {:<6} L = {:>3}  mean F {:.5}  drop {:>6.2}%",
                    r.sigma,
                    r.lambda,
                    r.l,
                    r.mean_fidelity,
                    100.0 * r.drop
                );
            }
        }
        Command::Compare { common, sequence } => {
            let (cfg, out) = load(&common)?;
            let seq = sequence.as_deref().map(load_sequence).transpose()?;
            let report = run_compare(&cfg, seq.as_ref(), &out)?;
            for (protocol, fits) in &report.fits {
                let fmt = |f: &Option<qrlcs_cli::FitReport>| {
                    f.as_ref().map_or("-".to_string(), |f| format!("{:.4}", f.exponent))
                };
                println!(
                    "{protocol:<15} raw {}  time-factorized {}",
                    fmt(&fits.raw),
                    fmt(&fits.time_factorized)
                );
            }
        }
        Command::Fit { input, column, out } => {
            let report = run_fit(&input, &column, out.as_deref())?;
            if out.is_none() {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("fit report serializes")
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qrlcs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
