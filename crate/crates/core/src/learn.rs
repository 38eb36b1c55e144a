//! Shared plumbing for learners: the scoring closure, evaluation logs and
//! the uniform random-search baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cpg::{CpgNetwork, WeightVector};
use crate::environment::{EnvError, Environment, EvalConfig};
use crate::fitness::{
    evaluate_fitness, DirectionSpec, FitnessBreakdown, FitnessParams, Trajectory,
};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error("evaluation {index} failed: {source}")]
    Environment {
        index: usize,
        #[source]
        source: EnvError,
        /// Everything evaluated before the failure.
        partial: Box<EvaluationLog>,
    },
}

impl LearnError {
    pub fn partial_log(&self) -> Option<&EvaluationLog> {
        match self {
            LearnError::Environment { partial, .. } => Some(partial.as_ref()),
            LearnError::Config(_) => None,
        }
    }
}

/// Search box for weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { lo: -1.0, hi: 1.0 }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.lo < self.hi && self.lo.is_finite() && self.hi.is_finite() {
            Ok(())
        } else {
            Err(LearnError::Config(format!(
                "bounds [{}, {}] must satisfy lo < hi",
                self.lo, self.hi
            )))
        }
    }

    /// Map a point of the unit cube into the box.
    pub fn denormalize(&self, unit: &[f64]) -> WeightVector {
        WeightVector(
            unit.iter()
                .map(|u| self.lo + u * (self.hi - self.lo))
                .collect(),
        )
    }

    pub fn normalize(&self, w: &WeightVector) -> Vec<f64> {
        w.as_slice()
            .iter()
            .map(|v| (v - self.lo) / (self.hi - self.lo))
            .collect()
    }
}

/// Everything needed to turn a weight vector into a fitness value.
pub struct Evaluator<'a> {
    pub net: &'a CpgNetwork,
    pub env: &'a dyn Environment,
    pub eval: EvalConfig,
    pub direction: DirectionSpec,
    pub fitness: FitnessParams,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        net: &'a CpgNetwork,
        env: &'a dyn Environment,
        eval: EvalConfig,
        direction: DirectionSpec,
        fitness: FitnessParams,
    ) -> Self {
        Evaluator {
            net,
            env,
            eval,
            direction,
            fitness,
        }
    }

    pub fn dimension(&self) -> usize {
        self.net.parameter_count()
    }

    pub fn score(
        &self,
        weights: &WeightVector,
    ) -> Result<(FitnessBreakdown, Trajectory), EnvError> {
        let traj = self.env.evaluate(self.net, weights, &self.eval)?;
        Ok((evaluate_fitness(&traj, self.direction, self.fitness), traj))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// 1-based evaluation index.
    pub index: usize,
    pub weights: WeightVector,
    pub breakdown: FitnessBreakdown,
    pub best_so_far: f64,
}

impl EvalRecord {
    pub fn fitness(&self) -> f64 {
        self.breakdown.fitness
    }
}

/// Every evaluation of a run in order, with the running best.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationLog {
    records: Vec<EvalRecord>,
    best: Option<usize>,
    best_trajectory: Option<Trajectory>,
}

impl EvaluationLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, weights: WeightVector, breakdown: FitnessBreakdown, traj: Trajectory) {
        let improved = match self.best {
            None => true,
            Some(b) => breakdown.fitness > self.records[b].breakdown.fitness,
        };
        if improved {
            self.best = Some(self.records.len());
            self.best_trajectory = Some(traj);
        }
        let best_so_far = match self.best {
            Some(b) if !improved => self.records[b].breakdown.fitness,
            _ => breakdown.fitness,
        };
        self.records.push(EvalRecord {
            index: self.records.len() + 1,
            weights,
            breakdown,
            best_so_far,
        });
    }

    pub fn best(&self) -> Option<&EvalRecord> {
        self.best.map(|b| &self.records[b])
    }

    pub fn best_trajectory(&self) -> Option<&Trajectory> {
        self.best_trajectory.as_ref()
    }

    /// Record of the best controller as of each evaluation.
    pub fn best_records(&self) -> Vec<&EvalRecord> {
        let mut out = Vec::with_capacity(self.records.len());
        let mut best: Option<&EvalRecord> = None;
        for r in &self.records {
            if best.is_none_or(|b| r.fitness() > b.fitness()) {
                best = Some(r);
            }
            out.push(best.unwrap());
        }
        out
    }

    /// Score `weights` and append the result.
    pub fn evaluate(
        &mut self,
        ev: &Evaluator<'_>,
        weights: WeightVector,
    ) -> Result<f64, LearnError> {
        match ev.score(&weights) {
            Ok((b, traj)) => {
                self.push(weights, b, traj);
                Ok(b.fitness)
            }
            Err(source) => Err(LearnError::Environment {
                index: self.records.len() + 1,
                source,
                partial: Box::new(self.clone()),
            }),
        }
    }
}

/// Uniform sampling inside the bounds.
pub fn random_search(
    ev: &Evaluator<'_>,
    budget: usize,
    bounds: Bounds,
    seed: u64,
) -> Result<EvaluationLog, LearnError> {
    bounds.validate()?;
    let d = ev.dimension();
    if d == 0 {
        return Err(LearnError::Config("network has no free parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = EvaluationLog::new();
    for _ in 0..budget {
        let w = WeightVector(
            (0..d)
                .map(|_| rng.gen_range(bounds.lo..=bounds.hi))
                .collect(),
        );
        log.evaluate(ev, w)?;
    }
    Ok(log)
}
