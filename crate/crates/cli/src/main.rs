use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gatekeep_cli::{parse_config, run_to_files, CliError, GridSpec, Mode, RunConfig};

/// Staged-entry economy with costly gatekeeping: solve, sweep and validate.
#[derive(Parser, Debug)]
#[command(name = "gatekeep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one equilibrium at `run.rho`.
    Solve(Common),
    /// Welfare curve over the precision grid.
    Sweep(Common),
    /// Welfare-maximizing precision.
    Optimum(Common),
    /// Welfare under per-activation transfers at `run.rho`.
    Pigouvian(Common),
    /// Single-stage limit economies.
    Limits(Common),
    /// Monte Carlo and quadrature checks of the closed forms.
    Validate(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; the baseline economy when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG chart destination (sweep only).
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Precision grid as lo:hi:step.
    #[arg(long)]
    grid: Option<GridSpec>,
    #[arg(long)]
    rho: Option<f64>,
    /// Suppress the summary on standard error.
    #[arg(long)]
    quiet: bool,
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Self::Solve(c) => (Mode::Solve, c),
            Self::Sweep(c) => (Mode::Sweep, c),
            Self::Optimum(c) => (Mode::Optimum, c),
            Self::Pigouvian(c) => (Mode::Pigouvian, c),
            Self::Limits(c) => (Mode::Limits, c),
            Self::Validate(c) => (Mode::Validate, c),
        }
    }
}

fn load(mode: Mode, args: &Common) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        None => RunConfig::baseline(mode),
    };
    let run = &mut config.run;
    run.mode = mode;
    if let Some(s) = args.seed {
        run.seed = s;
    }
    if let Some(g) = args.grid {
        run.grid = g;
    }
    if let Some(r) = args.rho {
        run.rho = Some(r);
    }
    if args.out.is_some() {
        run.out.clone_from(&args.out);
    }
    if args.svg.is_some() {
        run.svg.clone_from(&args.svg);
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let (mode, args) = Cli::parse().command.split();
    let result = load(mode, &args).and_then(|config| run_to_files(&config));
    match result {
        Ok(output) => {
            if !args.quiet {
                eprintln!("{}", output.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
