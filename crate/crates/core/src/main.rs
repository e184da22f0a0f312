use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fewboson::config::parse_config;
use fewboson::run::{
    exit_code, format_table1, run_converge, run_oracle, run_scan, run_solve, RunOptions,
};
use fewboson::Error;

#[derive(Parser)]
#[command(
    name = "fewboson",
    version,
    about = "Exact ground states of few 1D bosons in harmonic and double-well traps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for scan points (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory; overrides `output.dir` in the config, which in turn
    /// overrides the FEWBOSON_OUT environment variable.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state for a single parameter point.
    Solve(ConfigArg),
    /// Ground states along the configured scan axis.
    Scan(ConfigArg),
    /// Ground energy versus the number of orbitals.
    Converge(ConfigArg),
    /// Fermionized-limit energy and density for the configured trap.
    Oracle(ConfigArg),
    /// Print the effective 1D coupling for tabulated physical inputs.
    Table1,
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

/// `Ok(false)` when some point failed to converge.
fn run(cli: &Cli) -> Result<bool, Error> {
    let path = match &cli.command {
        Command::Table1 => {
            print!("{}", format_table1()?);
            return Ok(true);
        }
        Command::Solve(c) | Command::Scan(c) | Command::Converge(c) | Command::Oracle(c) => {
            &c.config
        }
    };
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os("FEWBOSON_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fewboson-out"));
    let opts = RunOptions {
        out_dir,
        jobs: cli.jobs,
        quiet: cli.quiet,
    };
    let ok = match &cli.command {
        Command::Solve(_) => run_solve(&cfg, &opts)?.succeeded(),
        Command::Scan(_) => run_scan(&cfg, &opts)?.succeeded(),
        Command::Converge(_) => run_converge(&cfg, &opts)?.succeeded(),
        Command::Oracle(_) => {
            run_oracle(&cfg, &opts)?;
            true
        }
        Command::Table1 => unreachable!(),
    };
    if !ok && !cli.quiet {
        eprintln!(
            "some points did not converge; see failures.json in {}",
            opts.out_dir.display()
        );
    }
    Ok(ok)
}
