use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::bayesopt::{bo_learn, BoConfig};
use crate::cpg::{build_network, format_sig17, WeightCoordinate};
use crate::environment::SurrogateEnvironment;
use crate::fitness::DirectionSpec;
use crate::hyperneat::{neat_learn, NeatConfig};
use crate::learn::{random_search, EvaluationLog, Evaluator, LearnError};
use crate::morphology::{parse_morphology, MorphologyTree};

use super::config::RunConfig;
use super::plan::Learner;
use super::HarnessError;

pub const ARTIFACT_VERSION: &str = concat!("loco ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Seed of one suite cell, derived from everything that identifies it.
pub fn cell_seed(
    master_seed: u64,
    robot: &str,
    direction_deg: f64,
    learner: Learner,
    rep: usize,
) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    for part in [
        robot,
        &direction_deg.to_string(),
        learner.name(),
        &rep.to_string(),
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn load_robot(path: &Path) -> Result<(MorphologyTree, String), HarnessError> {
    let text = read_text(path)?;
    let tree = parse_morphology(&text).map_err(|e| HarnessError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok((tree, text))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnRequest {
    pub robot_file: PathBuf,
    /// Degrees.
    pub direction: f64,
    pub learner: Learner,
    pub budget: usize,
    pub seed: u64,
    pub config: RunConfig,
    /// Set for suite cells.
    pub master_seed: Option<u64>,
    pub repetition: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub robot_name: String,
    pub robot_sha256: String,
    pub coords: Vec<WeightCoordinate>,
    pub log: EvaluationLog,
    /// Set when the learner stopped early; `log` then holds the partial run.
    pub failure: Option<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Learner settings for a given evaluation budget.
///
/// BO spends up to its configured initial-design size on the Latin
/// hypercube and the rest on acquisitions. HyperNEAT runs
/// `budget / population` generations.
pub(crate) fn budgeted(
    learner: Learner,
    budget: usize,
    seed: u64,
    cfg: &RunConfig,
) -> Result<(BoConfig, NeatConfig), HarnessError> {
    let initial = cfg.bo.initial_samples.min(budget);
    let bo = BoConfig {
        initial_samples: initial,
        iterations: budget - initial,
        bounds: cfg.bounds,
        seed,
        ..cfg.bo
    };
    let neat = NeatConfig {
        generations: budget / cfg.neat.population,
        seed,
        ..cfg.neat
    };
    match learner {
        Learner::Bo if initial < 2 => Err(HarnessError::Usage(format!(
            "budget {budget} too small for bo (needs at least 2)"
        ))),
        Learner::Neat if neat.generations == 0 => Err(HarnessError::Usage(format!(
            "budget {budget} smaller than the neat population {}",
            cfg.neat.population
        ))),
        _ => Ok((bo, neat)),
    }
}

/// Run one learner on one robot and direction.
pub fn learn(req: &LearnRequest) -> Result<RunArtifacts, HarnessError> {
    if req.budget == 0 {
        return Err(HarnessError::Usage("budget must be positive".into()));
    }
    if !(req.direction > -180.0 && req.direction <= 180.0) {
        return Err(HarnessError::Usage(format!(
            "direction {} outside (-180, 180]",
            req.direction
        )));
    }
    req.config.validate()?;
    let (bo, neat) = budgeted(req.learner, req.budget, req.seed, &req.config)?;
    let (tree, text) = load_robot(&req.robot_file)?;
    let net = build_network(&tree).map_err(|e| HarnessError::Input {
        path: req.robot_file.clone(),
        message: e.to_string(),
    })?;
    let env = SurrogateEnvironment;
    let ev = Evaluator::new(
        &net,
        &env,
        req.config.eval,
        DirectionSpec::from_degrees(req.direction),
        req.config.fitness,
    );

    let started_unix = unix_now();
    let result = match req.learner {
        Learner::Bo => bo_learn(&ev, &bo).map(|t| t.log),
        Learner::Neat => neat_learn(&ev, &neat).map(|t| t.log),
        Learner::Random => random_search(&ev, req.budget, req.config.bounds, req.seed),
    };
    let (log, failure) = match result {
        Ok(log) => (log, None),
        Err(e @ LearnError::Config(_)) => return Err(HarnessError::Run(e.to_string())),
        Err(e) => (
            e.partial_log().cloned().unwrap_or_default(),
            Some(e.to_string()),
        ),
    };
    Ok(RunArtifacts {
        robot_name: tree.name().to_string(),
        robot_sha256: sha256_hex(text.as_bytes()),
        coords: net.weight_coordinates(),
        log,
        failure,
        started_unix,
        finished_unix: unix_now(),
    })
}

pub const TRACE_HEADER: &str = "eval_index,fitness,best_so_far,delta,speed,best_delta,best_speed";

/// One row per evaluation. `best_*` columns describe the best controller
/// found so far.
pub fn trace_csv(log: &EvaluationLog) -> String {
    let mut out = String::from("# delta in radians, speed in metres per minute\n");
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (r, best) in log.records().iter().zip(log.best_records()) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.index,
            format_sig17(r.fitness()),
            format_sig17(r.best_so_far),
            format_sig17(r.breakdown.delta),
            format_sig17(r.breakdown.speed),
            format_sig17(best.breakdown.delta),
            format_sig17(best.breakdown.speed),
        );
    }
    out
}

fn manifest(req: &LearnRequest, art: &RunArtifacts) -> String {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let config = req.config.to_text();
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("artifact_version", ARTIFACT_VERSION.into());
    kv("robot", art.robot_name.clone());
    kv("robot_file", req.robot_file.display().to_string());
    kv("robot_sha256", art.robot_sha256.clone());
    kv("direction_deg", req.direction.to_string());
    kv("learner", req.learner.to_string());
    kv("budget", req.budget.to_string());
    kv("master_seed", opt(req.master_seed.map(|s| s.to_string())));
    kv("repetition", opt(req.repetition.map(|r| r.to_string())));
    kv("seed", req.seed.to_string());
    kv("config_sha256", sha256_hex(config.as_bytes()));
    kv("parameters", art.coords.len().to_string());
    kv("evaluations", art.log.len().to_string());
    kv(
        "best_fitness",
        opt(art.log.best().map(|b| format_sig17(b.fitness()))),
    );
    kv(
        "status",
        art.failure
            .as_ref()
            .map_or_else(|| "ok".into(), |f| format!("failed: {f}")),
    );
    kv("started_unix", art.started_unix.to_string());
    kv("finished_unix", art.finished_unix.to_string());
    for line in config.lines() {
        let _ = writeln!(out, "config.{line}");
    }
    out
}

fn write_file(path: &Path, body: &str) -> Result<(), HarnessError> {
    fs::write(path, body).map_err(|e| HarnessError::io(path, e))
}

/// Write the four run artifacts into `dir`, creating it if needed.
pub fn write_run(dir: &Path, req: &LearnRequest, art: &RunArtifacts) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_file(&dir.join("trace.csv"), &trace_csv(&art.log))?;
    if let Some(best) = art.log.best() {
        write_file(
            &dir.join("best_weights.csv"),
            &best.weights.to_csv(&art.coords),
        )?;
    }
    if let Some(traj) = art.log.best_trajectory() {
        write_file(&dir.join("best_trajectory.csv"), &traj.to_csv())?;
    }
    write_file(&dir.join("manifest.txt"), &manifest(req, art))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_seed_separates_cells() {
        let a = cell_seed(1, "spider9", 0.0, Learner::Bo, 1);
        assert_eq!(a, cell_seed(1, "spider9", 0.0, Learner::Bo, 1));
        assert_ne!(a, cell_seed(2, "spider9", 0.0, Learner::Bo, 1));
        assert_ne!(a, cell_seed(1, "spider13", 0.0, Learner::Bo, 1));
        assert_ne!(a, cell_seed(1, "spider9", 20.0, Learner::Bo, 1));
        assert_ne!(a, cell_seed(1, "spider9", 0.0, Learner::Neat, 1));
        assert_ne!(a, cell_seed(1, "spider9", 0.0, Learner::Bo, 2));
    }

    #[test]
    fn budget_mapping() {
        let cfg = RunConfig::default();
        let (bo, neat) = budgeted(Learner::Bo, 300, 5, &cfg).unwrap();
        assert_eq!((bo.initial_samples, bo.iterations), (50, 250));
        assert_eq!(neat.generations, 15);
        let (bo, _) = budgeted(Learner::Bo, 30, 5, &cfg).unwrap();
        assert_eq!((bo.initial_samples, bo.iterations), (30, 0));
        let (_, neat) = budgeted(Learner::Neat, 1500, 5, &cfg).unwrap();
        assert_eq!(neat.generations, 75);
        assert!(budgeted(Learner::Neat, 10, 5, &cfg).is_err());
        assert!(budgeted(Learner::Bo, 1, 5, &cfg).is_err());
        assert!(budgeted(Learner::Random, 1, 5, &cfg).is_ok());
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
