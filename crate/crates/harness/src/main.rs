use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qgyro::{write_bundle, Config, ExperimentRegistry, HarnessError, RunContext, RunInfo};

#[derive(Parser, Debug)]
#[command(name = "qgyro", version, about = "Feedback-driven spin precession experiments")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,

    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0: all cores).
    #[arg(long, global = true, env = "QGYRO_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// k_x and k_y versus omega.
    Kcurves,
    /// omega_s along C_Q, Omega_d or beta.
    ShiftSweep,
    /// Feedback dynamics and spectra.
    Dynamics,
    /// Randomized symmetry and invariant checks.
    Properties,
    /// Every experiment in turn.
    All,
}

impl Command {
    fn experiment(&self) -> Option<&'static str> {
        match self {
            Command::Kcurves => Some("kcurves"),
            Command::ShiftSweep => Some("shift-sweep"),
            Command::Dynamics => Some("dynamics"),
            Command::Properties => Some("properties"),
            Command::All => None,
        }
    }
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let registry = ExperimentRegistry::default();
    let selected: Vec<_> = match cli.command.experiment() {
        Some(name) => vec![registry.get(name).expect("every subcommand is registered")],
        None => registry.iter().collect(),
    };

    let config_toml = config.to_toml_string();
    let info = RunInfo { seed: cli.seed, threads: pool.current_num_threads(), config_toml: &config_toml };
    let ctx = RunContext { config: &config, seed: cli.seed };
    let mut first_err = None;
    for exp in selected {
        eprintln!("running {}", exp.name());
        let bundle = pool.install(|| exp.run(&ctx))?;
        let dir = write_bundle(&bundle, &cli.out, &info)?;
        eprintln!("wrote {}", dir.display());
        if let Err(e) = bundle.status() {
            eprintln!("{}: {e}", exp.name());
            first_err.get_or_insert(e);
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
