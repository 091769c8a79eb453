//! Command-line frontend: experiment orchestration, file output, and timing
//! benchmarks on top of `serpent-core`.

mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serpent_core::analysis::{gait_metrics, joint_spectrum};
use serpent_core::baseline::{grid_search, pareto_front, rollout_serpenoid};
use serpent_core::dynamics::Integrator;
use serpent_core::mpc::{eval_step, run_mpc, run_mpc_instrumented};
use serpent_core::types::{ControlVector, Trajectory};
use serpent_core::SimError;

use config::ExperimentConfig;

/// CLI failure modes mapped onto process exit codes: configuration problems
/// exit 1, numerical failures exit 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::InvalidParams(_) | SimError::WindowOutOfRange { .. } => {
                CliError::Config(err.to_string())
            }
            SimError::SingularSystem { .. }
            | SimError::NonFinite { .. }
            | SimError::NotPositiveDefinite { .. } => CliError::Numerical(err.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "serpent",
    about = "Snake-robot gait synthesis and benchmarking",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Replace the configured environment with a coefficient preset.
    #[arg(long, value_parser = ["box", "dry", "viscous", "fluid"])]
    env: Option<String>,
    /// Worker threads; falls back to SERPENT_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trajectory file produced by `simulate` or `mpc`.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for the metrics and spectrum files.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Measurement window start [s].
    #[arg(long, default_value_t = 2.0)]
    window_start: f64,
    /// Measurement window end [s]; defaults to the trajectory end.
    #[arg(long)]
    window_end: Option<f64>,
    /// Goal-ward unit direction used for the speed projection.
    #[arg(long, default_value_t = -1.0)]
    direction_x: f64,
    #[arg(long, default_value_t = 0.0)]
    direction_y: f64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out a fixed serpenoid (or zero-torque) trajectory.
    Simulate(RunArgs),
    /// Run the full receding-horizon gait synthesis.
    Mpc(RunArgs),
    /// Sweep serpenoid/PD parameters and extract the Pareto front.
    Gridsearch(RunArgs),
    /// Recompute speed/power metrics and joint spectra from a trajectory file.
    Analyze(AnalyzeArgs),
    /// Measure per-plan optimization wall time over a full run.
    Bench(RunArgs),
}

fn init_threads(requested: Option<usize>) {
    let count = requested.or_else(|| {
        std::env::var("SERPENT_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
    });
    if let Some(n) = count.filter(|&n| n > 0) {
        // A second initialization in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn load_run_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    init_threads(args.threads);
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(kind) = &args.env {
        config.override_environment(kind)?;
    }
    if let Some(dir) = &args.output {
        config.output_dir = dir.clone();
    }
    Ok(config)
}

/// Zero-torque rollout used by `simulate` when no serpenoid is configured.
fn rollout_zero_torque(config: &ExperimentConfig) -> Result<Trajectory<f64>, CliError> {
    let params = &config.snake;
    let mut state = config.initial_state();
    let mut states = vec![state.clone()];
    let mut controls = Vec::new();
    let u = ControlVector::zeros(params.n_joints());
    for step in 0..config.total_steps() {
        state = eval_step(
            &state,
            &u,
            &config.environment,
            params,
            Integrator::Rk4,
            config.mpc.eval_substeps,
        )?;
        if !state.is_finite() {
            return Err(SimError::NonFinite { step }.into());
        }
        states.push(state.clone());
        controls.push(u.clone());
    }
    Ok(Trajectory::new(params.dt, states, controls)?)
}

fn cmd_simulate(args: &RunArgs) -> Result<(), CliError> {
    let config = load_run_config(args)?;
    let traj = match &config.serpenoid {
        Some(serpenoid) => {
            rollout_serpenoid(serpenoid, &config.environment, &config.snake, config.duration)?
        }
        None => rollout_zero_torque(&config)?,
    };
    let path = config.output_dir.join("trajectory.csv");
    io::write_trajectory(&path, &traj, &config.provenance())?;
    println!(
        "simulate: {} steps in {} -> {}",
        traj.len(),
        config.environment.label(),
        path.display()
    );
    Ok(())
}

fn cmd_mpc(args: &RunArgs) -> Result<(), CliError> {
    let config = load_run_config(args)?;
    let mpc_config = config.mpc.to_config(config.total_steps());
    let traj = run_mpc(
        &config.initial_state(),
        &config.environment,
        &config.eval_environment(),
        &config.snake,
        &config.cost,
        &mpc_config,
    )?;
    let provenance = config.provenance();
    io::write_trajectory(&config.output_dir.join("trajectory.csv"), &traj, &provenance)?;

    let metrics = gait_metrics(&traj, config.ramp_up, config.duration, config.goal_direction())?;
    io::write_metrics(
        &config.output_dir.join("metrics.csv"),
        &[(config.environment.label().to_string(), metrics)],
        &provenance,
    )?;
    println!(
        "mpc: {} speed {:.3} m/s power {:.3} W over [{}, {}] s -> {}",
        config.environment.label(),
        metrics.mean_speed,
        metrics.mean_power,
        config.ramp_up,
        config.duration,
        config.output_dir.display()
    );
    Ok(())
}

fn cmd_gridsearch(args: &RunArgs) -> Result<(), CliError> {
    let config = load_run_config(args)?;
    let grid = config
        .grid
        .clone()
        .ok_or_else(|| CliError::Config("gridsearch needs a [grid] section".into()))?;
    let result = grid_search(
        &grid,
        &config.environment,
        &config.snake,
        config.duration,
        config.ramp_up,
        config.goal_direction(),
    )?;
    let front = pareto_front(&result.points);
    let provenance = config.provenance();
    io::write_points(&config.output_dir.join("points.csv"), &result.points, &provenance)?;
    io::write_points(&config.output_dir.join("front.csv"), &front, &provenance)?;
    println!(
        "gridsearch: {} cells evaluated ({} failed), front size {} -> {}",
        result.points.len() + result.failures,
        result.failures,
        front.len(),
        config.output_dir.display()
    );
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    init_threads(args.threads);
    let traj = io::read_trajectory(&args.input)?;
    let window_end = args.window_end.unwrap_or_else(|| traj.duration());
    let direction = nalgebra::Vector2::new(args.direction_x, args.direction_y);
    let metrics = gait_metrics(&traj, args.window_start, window_end, direction)?;
    let spectrum = joint_spectrum(&traj, args.window_start, window_end)?;

    let provenance = format!(
        "analyze\ninput = {:?}\nwindow_start = {}\nwindow_end = {}\ndirection = [{}, {}]",
        args.input, args.window_start, window_end, args.direction_x, args.direction_y
    );
    let label = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trajectory".into());
    io::write_metrics(
        &args.output.join("metrics.csv"),
        &[(label, metrics)],
        &provenance,
    )?;
    io::write_spectrum(&args.output.join("spectrum.csv"), &spectrum, &provenance)?;
    println!(
        "analyze: speed {:.3} m/s power {:.3} W, dominant {:?} Hz -> {}",
        metrics.mean_speed,
        metrics.mean_power,
        spectrum.dominant_frequency,
        args.output.display()
    );
    Ok(())
}

fn cmd_bench(args: &RunArgs) -> Result<(), CliError> {
    let config = load_run_config(args)?;
    let mpc_config = config.mpc.to_config(config.total_steps());
    let (_, stats) = run_mpc_instrumented(
        &config.initial_state(),
        &config.environment,
        &config.eval_environment(),
        &config.snake,
        &config.cost,
        &mpc_config,
    )?;
    let path = config.output_dir.join("bench.txt");
    io::write_bench_report(&path, &stats, &config.provenance())?;
    let mean = stats.iter().map(|s| s.seconds).sum::<f64>() / stats.len().max(1) as f64;
    println!(
        "bench: {} plans of horizon {}, mean {:.4} s/plan -> {}",
        stats.len(),
        mpc_config.ilqr.horizon,
        mean,
        path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Mpc(args) => cmd_mpc(args),
        Command::Gridsearch(args) => cmd_gridsearch(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ CliError::Config(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
        Err(err @ CliError::Numerical(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
