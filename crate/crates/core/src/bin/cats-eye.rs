use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cats_eye::config::ExperimentConfig;
use cats_eye::experiment::{run_command, Command};
use cats_eye::Error;

#[derive(Parser)]
#[command(version, about = "Equilibria, eigenvalues and streamline topology on periodic channels")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// RNG seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve the equilibrium for every eps in the config.
    Solve,
    /// Smallest Dirichlet eigenvalue for every eps.
    Eigen,
    /// Critical points, orbits and island counts.
    Topology,
    /// Carleman ratio sweeps and the divergence identity.
    Carleman,
    /// The four-cell flat/curved by gap-zero/current matrix.
    Matrix,
    /// Contour plots only.
    Render,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Eigen => Command::Eigen,
            Cmd::Topology => Command::Topology,
            Cmd::Carleman => Command::Carleman,
            Cmd::Matrix => Command::Matrix,
            Cmd::Render => Command::Render,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    let mut cfg = match &cli.config {
        Some(p) => match ExperimentConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(1);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            log::warn!("thread pool: {e}");
        }
    }

    let out = cfg.output_dir.clone();
    match run_command(cli.command.into(), &cfg, &out) {
        Ok(m) => {
            let failed = m.failures();
            log::info!(
                "{}: {} runs, {failed} failed, {} files in {}",
                m.command,
                m.runs.len(),
                m.files.len(),
                out.display()
            );
            if failed > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
