use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loco::cpg::WeightVector;
use loco::environment::surrogate_evaluate;
use loco::harness::{
    emit_reports, learn, read_text, run_suite, write_run, ExperimentPlan, HarnessError,
    LearnRequest, Learner, ReportOptions, RunConfig,
};
use loco::{build_network, evaluate_fitness, parse_morphology, DirectionSpec, FitnessBreakdown};

#[derive(Parser)]
#[command(
    name = "loco",
    version,
    about = "Learn directed locomotion for modular robots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// `key = value` file overriding default run settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one learner on one robot and target direction.
    Learn {
        #[arg(long)]
        robot: PathBuf,
        /// Target direction in degrees, relative to the initial heading.
        #[arg(long, allow_hyphen_values = true)]
        direction: f64,
        #[arg(long)]
        learner: Learner,
        #[arg(long, default_value_t = 1500)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Run every cell of an experiment plan and write reports.
    Suite {
        plan: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Cells run concurrently (default: logical cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Succeed if at least one cell completed.
        #[arg(long)]
        allow_partial: bool,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Score a weight file and print its fitness breakdown.
    Evaluate {
        #[arg(long)]
        robot: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        direction: f64,
        #[arg(long)]
        weights: PathBuf,
        /// Where to write the trajectory CSV.
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Rebuild reports from the run directories under `out`.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also re-score best trajectories under every other direction.
        #[arg(long)]
        cross: bool,
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn load_config(arg: &ConfigArg) -> Result<RunConfig, HarnessError> {
    match &arg.config {
        None => Ok(RunConfig::default()),
        Some(p) => RunConfig::from_text(&read_text(p)?),
    }
}

fn input_err(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Input {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn evaluate(
    robot: &Path,
    direction: f64,
    weights: &Path,
    out: &Path,
    cfg: &RunConfig,
) -> Result<(), HarnessError> {
    let tree = parse_morphology(&read_text(robot)?).map_err(|e| input_err(robot, e.to_string()))?;
    let net = build_network(&tree).map_err(|e| input_err(robot, e.to_string()))?;
    let (_, w): (_, WeightVector) = WeightVector::from_csv(&read_text(weights)?)
        .map_err(|e| input_err(weights, e.to_string()))?;
    if w.len() != net.parameter_count() {
        return Err(input_err(
            weights,
            format!(
                "{} weights but {} has {} parameters",
                w.len(),
                tree.name(),
                net.parameter_count()
            ),
        ));
    }
    let traj =
        surrogate_evaluate(&net, &w, &cfg.eval).map_err(|e| HarnessError::Run(e.to_string()))?;
    let b = evaluate_fitness(&traj, DirectionSpec::from_degrees(direction), cfg.fitness);
    std::fs::write(out, traj.to_csv()).map_err(|e| HarnessError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    println!("{}", FitnessBreakdown::CSV_HEADER);
    println!("{}", b.to_csv_row());
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Learn {
            robot,
            direction,
            learner,
            budget,
            seed,
            out,
            config,
        } => {
            let req = LearnRequest {
                robot_file: robot,
                direction,
                learner,
                budget,
                seed,
                config: load_config(&config)?,
                master_seed: None,
                repetition: None,
            };
            let art = learn(&req)?;
            write_run(&out, &req, &art)?;
            if let Some(f) = art.failure {
                return Err(HarnessError::Run(f));
            }
            if let Some(best) = art.log.best() {
                eprintln!(
                    "best fitness {:.6} after {} evaluations",
                    best.fitness(),
                    art.log.len()
                );
            }
            Ok(())
        }
        Command::Suite {
            plan,
            out,
            jobs,
            allow_partial,
            config,
        } => {
            let base = load_config(&config)?;
            let plan = ExperimentPlan::parse(&read_text(&plan)?, base)?;
            let jobs = jobs.unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
            if jobs == 0 {
                return Err(HarnessError::Usage("--jobs must be at least 1".into()));
            }
            let summary = run_suite(&plan, &out, jobs, allow_partial)?;
            eprintln!(
                "{} of {} cells succeeded; {} report files",
                summary.succeeded(),
                summary.cells.len(),
                summary.reports.len()
            );
            Ok(())
        }
        Command::Evaluate {
            robot,
            direction,
            weights,
            out,
            config,
        } => evaluate(&robot, direction, &weights, &out, &load_config(&config)?),
        Command::Report { out, cross, config } => {
            let cfg = load_config(&config)?;
            let written = emit_reports(
                &out,
                &ReportOptions {
                    cross_direction: cross,
                    fitness: cfg.fitness,
                },
            )?;
            eprintln!("{} report files written", written.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
