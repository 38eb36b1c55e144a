use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cpg::format_sig17;

use super::plan::{ExperimentPlan, Learner};
use super::report::{emit_reports, ReportOptions};
use super::run::{cell_seed, learn, load_robot, write_run, LearnRequest};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok {
        evaluations: usize,
        best_fitness: f64,
    },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCell {
    pub robot: String,
    pub direction: f64,
    pub learner: Learner,
    pub repetition: usize,
    pub seed: u64,
    pub dir: PathBuf,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub cells: Vec<SuiteCell>,
    pub reports: Vec<PathBuf>,
}

impl SuiteSummary {
    pub fn succeeded(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c.status, CellStatus::Ok { .. }))
            .count()
    }

    pub fn failed(&self) -> usize {
        self.cells.len() - self.succeeded()
    }
}

fn run_cell(req: &LearnRequest, dir: &Path) -> CellStatus {
    let result = learn(req).and_then(|art| {
        write_run(dir, req, &art)?;
        Ok(art)
    });
    match result {
        Ok(art) => match (&art.failure, art.log.best()) {
            (None, Some(best)) => CellStatus::Ok {
                evaluations: art.log.len(),
                best_fitness: best.fitness(),
            },
            (Some(f), _) => CellStatus::Failed(f.clone()),
            (None, None) => CellStatus::Failed("no evaluations".into()),
        },
        Err(e) => CellStatus::Failed(e.to_string()),
    }
}

/// Execute every cell of `plan` under `out`, `jobs` cells at a time, then
/// write reports. Fails with a run error unless every cell succeeded, or
/// `allow_partial` is set and at least one did.
pub fn run_suite(
    plan: &ExperimentPlan,
    out: &Path,
    jobs: usize,
    allow_partial: bool,
) -> Result<SuiteSummary, HarnessError> {
    plan.validate()?;
    let mut robots = vec![];
    for path in &plan.robots {
        let (tree, _) = load_robot(path)?;
        if robots
            .iter()
            .any(|(n, _): &(String, PathBuf)| n == tree.name())
        {
            return Err(HarnessError::Usage(format!(
                "robot name `{}` appears twice in the plan",
                tree.name()
            )));
        }
        robots.push((tree.name().to_string(), path.clone()));
    }

    let mut cells = vec![];
    for (name, path) in &robots {
        for &direction in &plan.directions {
            for &learner in &plan.learners {
                for rep in 1..=plan.repetitions {
                    let seed = cell_seed(plan.master_seed, name, direction, learner, rep);
                    let req = LearnRequest {
                        robot_file: path.clone(),
                        direction,
                        learner,
                        budget: plan.budget,
                        seed,
                        config: plan.config,
                        master_seed: Some(plan.master_seed),
                        repetition: Some(rep),
                    };
                    let dir = out
                        .join(name)
                        .join(direction.to_string())
                        .join(learner.name())
                        .join(format!("rep{rep}"));
                    cells.push((name.clone(), req, dir));
                }
            }
        }
    }

    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Run(format!("cannot start worker pool: {e}")))?;
    let statuses: Vec<CellStatus> = pool.install(|| {
        cells
            .par_iter()
            .map(|(name, req, dir)| {
                let s = run_cell(req, dir);
                match &s {
                    CellStatus::Ok { best_fitness, .. } => log::info!(
                        "{name} {} {} rep{}: best {best_fitness:.4}",
                        req.direction,
                        req.learner,
                        req.repetition.unwrap_or(0)
                    ),
                    CellStatus::Failed(m) => log::warn!(
                        "{name} {} {} rep{} failed: {m}",
                        req.direction,
                        req.learner,
                        req.repetition.unwrap_or(0)
                    ),
                }
                s
            })
            .collect()
    });

    let cells: Vec<SuiteCell> = cells
        .into_iter()
        .zip(statuses)
        .map(|((robot, req, dir), status)| SuiteCell {
            robot,
            direction: req.direction,
            learner: req.learner,
            repetition: req.repetition.unwrap_or(0),
            seed: req.seed,
            dir,
            status,
        })
        .collect();
    write_cell_table(out, &cells)?;

    let mut summary = SuiteSummary {
        cells,
        reports: vec![],
    };
    if summary.succeeded() > 0 {
        summary.reports = emit_reports(
            out,
            &ReportOptions {
                cross_direction: false,
                fitness: plan.config.fitness,
            },
        )?;
    }
    let ok = if allow_partial {
        summary.succeeded() > 0
    } else {
        summary.failed() == 0
    };
    if ok {
        Ok(summary)
    } else {
        Err(HarnessError::Run(format!(
            "{} of {} cells failed; see {}",
            summary.failed(),
            summary.cells.len(),
            out.join("cells.csv").display()
        )))
    }
}

fn write_cell_table(out: &Path, cells: &[SuiteCell]) -> Result<(), HarnessError> {
    let mut csv = String::from(
        "robot,direction_deg,learner,repetition,seed,status,evaluations,best_fitness,message\n",
    );
    for c in cells {
        let (status, evals, best, msg) = match &c.status {
            CellStatus::Ok {
                evaluations,
                best_fitness,
            } => (
                "ok",
                evaluations.to_string(),
                format_sig17(*best_fitness),
                String::new(),
            ),
            CellStatus::Failed(m) => (
                "failed",
                String::new(),
                String::new(),
                m.replace([',', '\n'], ";"),
            ),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{status},{evals},{best},{msg}",
            c.robot, c.direction, c.learner, c.repetition, c.seed
        );
    }
    let path = out.join("cells.csv");
    fs::write(&path, csv).map_err(|e| HarnessError::io(&path, e))
}
