use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use topeig::{run, Command, Invocation};

#[derive(Parser)]
#[command(
    name = "topeig",
    version,
    about = "Largest-eigenvalue experiments for sample covariance matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Cmd {
    /// λmax(S)/λmax(Γ) over an N ladder.
    SimulateConvergence,
    /// Histogram of the centered statistic F_N at one N.
    SimulateFluctuations,
    /// Full spectrum and ESD of the population matrix.
    ToeplitzSpectrum,
    /// Top eigenvalues of the limiting integral operator.
    KernelLimit,
    /// Support of the limiting companion measure on an x grid.
    SupportScan,
}

#[derive(Args)]
struct Common {
    /// TOML config, or a summary.json to replay.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Dotted-key override applied before validation, e.g. experiment.replicates=20.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, global = true, default_value_t = 1, value_name = "K")]
    workers: usize,
    /// Root seed, replacing the config's.
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,
    /// Also write replicate 0's matrices in SPLM format.
    #[arg(long, global = true)]
    dump_matrices: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::SimulateConvergence => Command::SimulateConvergence,
        Cmd::SimulateFluctuations => Command::SimulateFluctuations,
        Cmd::ToeplitzSpectrum => Command::ToeplitzSpectrum,
        Cmd::KernelLimit => Command::KernelLimit,
        Cmd::SupportScan => Command::SupportScan,
    };
    let inv = Invocation {
        command,
        config_path: cli.common.config,
        overrides: cli.common.overrides,
        workers: cli.common.workers,
        seed: cli.common.seed,
        out: cli.common.out,
        dump_matrices: cli.common.dump_matrices,
    };
    match run(&inv, &mut |line| eprintln!("{line}")) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", inv.out.join(f).display());
            }
            if outcome.exit_code == 4 {
                eprintln!("error: certification inconclusive");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
