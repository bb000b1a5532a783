use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use otfs_gsvd::config::{load_config, parse_snr_range, ExperimentConfig};
use otfs_gsvd::output::{emit_outputs, unix_time, RunManifest};
use otfs_gsvd::precode::Scheme;
use otfs_gsvd::sim::{run_ber_sweep, run_ber_sweep_with_threads};
use otfs_gsvd::{Error, Result};

#[derive(Parser)]
#[command(name = "otfs-gsvd", version, about = "Two-user MIMO-OTFS BER simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER sweep described by a config file.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Scheme(s), comma separated: gsvd, bd_mmse, mmse_eq, mmse_prec, awgn.
    #[arg(long)]
    scheme: Option<String>,
    /// SNR grid as start:step:stop in dB.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write an SVG plot per CSV.
    #[arg(long)]
    plot: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn apply_overrides(mut config: ExperimentConfig, args: &RunArgs) -> Result<ExperimentConfig> {
    if let Some(list) = &args.scheme {
        config.schemes = list.split(',').map(|s| s.trim().parse::<Scheme>()).collect::<Result<_>>()?;
    }
    if let Some(range) = &args.snr {
        config.snr_db = parse_snr_range(range)?;
    }
    if let Some(frames) = args.frames {
        config.frames = frames;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: RunArgs) -> Result<()> {
    let started = unix_time();
    let config = apply_overrides(load_config(&args.config)?, &args)?;
    let results = match args.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => run_ber_sweep_with_threads(&config, t)?,
        None => run_ber_sweep(&config)?,
    };
    let mut manifest = RunManifest::new(&config, started)?;
    for path in emit_outputs(&results, &mut manifest, &args.out, args.plot)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
