mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{RunConfig, SolverChoice};
use error::CliError;
use run::{Runner, Stages};

/// Dipole–nanostructure pseudo-mode simulations.
#[derive(Debug, Parser)]
#[command(name = "pseudomode", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: fig2..fig8, appendixD.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    solver: Option<SolverChoice>,
    /// Output time step (fs).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Duration (fs).
    #[arg(long, global = true)]
    tmax: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate every kernel.
    Kernel,
    /// Tabulate and fit every kernel.
    Fit,
    /// Time evolution, exponential sums and coherence spectra.
    Evolve,
    /// Photon-density maps and node lines.
    Map,
    /// Bandwidth scan and beating study.
    Scan,
    /// Time the Laplace and Volterra solvers on every scenario.
    Benchmark,
    /// Everything.
    Run,
    /// List the built-in configurations.
    Presets,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(name)) => RunConfig::parse(config::preset(name)?)?,
        (None, None) => return Err(CliError::Config("need --config or --preset".into())),
    };
    if let Some(s) = cli.solver {
        cfg.solver.kind = s;
    }
    if let Some(dt) = cli.dt {
        cfg.solver.dt = dt;
    }
    if let Some(t) = cli.tmax {
        cfg.solver.t_max = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Command::Presets = cli.command {
        for (name, text) in config::PRESETS {
            let about = text.lines().next().unwrap_or("").trim_start_matches("# ");
            println!("{name:10} {about}");
        }
        return Ok(());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let cfg = load(cli)?;
    let (name, stages) = match cli.command {
        Command::Kernel => (
            "kernel",
            Stages {
                kernels: true,
                ..Stages::NONE
            },
        ),
        Command::Fit => (
            "fit",
            Stages {
                kernels: true,
                fits: true,
                ..Stages::NONE
            },
        ),
        Command::Evolve => (
            "evolve",
            Stages {
                evolve: true,
                ..Stages::NONE
            },
        ),
        Command::Map => (
            "map",
            Stages {
                maps: true,
                ..Stages::NONE
            },
        ),
        Command::Scan => (
            "scan",
            Stages {
                scan: true,
                ..Stages::NONE
            },
        ),
        Command::Run => ("run", Stages::ALL),
        Command::Benchmark => return benchmark(cli, cfg),
        Command::Presets => unreachable!(),
    };
    let mut runner = Runner::new(&cfg, &cli.out_dir)?;
    runner.run(stages)?;
    let m = runner.write_manifest(name)?;
    println!(
        "{}: {} files in {}",
        cfg.id,
        m.outputs.len(),
        cli.out_dir.display()
    );
    Ok(())
}

fn benchmark(cli: &Cli, mut cfg: RunConfig) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for kind in [SolverChoice::Laplace, SolverChoice::Volterra] {
        cfg.solver.kind = kind;
        let dir = cli.out_dir.join(format!("{kind:?}").to_lowercase());
        let mut runner = Runner::new(&cfg, &dir)?;
        let start = Instant::now();
        runner.run(Stages {
            evolve: true,
            ..Stages::NONE
        })?;
        rows.push((kind, start.elapsed().as_secs_f64()));
        runner.write_manifest("benchmark")?;
    }
    for (kind, secs) in rows {
        println!(
            "{:10} {:>10.3} s  ({} scenarios)",
            format!("{kind:?}"),
            secs,
            cfg.scenarios.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
