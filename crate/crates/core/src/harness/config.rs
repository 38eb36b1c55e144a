use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bayesopt::{BoConfig, KernelParams};
use crate::environment::EvalConfig;
use crate::fitness::FitnessParams;
use crate::hyperneat::{MutationRates, NeatConfig};
use crate::learn::Bounds;

use super::HarnessError;

/// Parse `key = value` lines. `#` starts a comment; blank lines are ignored.
/// Later duplicates override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", i + 1));
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Every tunable that is not part of the experiment plan itself.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunConfig {
    pub eval: EvalConfig,
    pub fitness: FitnessParams,
    pub bounds: Bounds,
    pub bo: BoConfig,
    pub neat: NeatConfig,
}

/// Config keys in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "duration",
    "tick_rate",
    "sample_count",
    "k_v",
    "k_w",
    "omega",
    "epsilon",
    "bounds_lo",
    "bounds_hi",
    "bo_initial_samples",
    "bo_ucb_alpha",
    "bo_variance",
    "bo_length_scale",
    "bo_jitter",
    "bo_acq_candidates",
    "bo_acq_refine_steps",
    "neat_population",
    "neat_tournament_size",
    "neat_crossover_prob",
    "neat_elitism",
    "neat_mutation_prob",
    "neat_add_connection",
    "neat_add_node",
    "neat_weight_sigma",
    "neat_weight_reset",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, HarnessError> {
    v.parse()
        .map_err(|_| HarnessError::Usage(format!("config key `{key}`: cannot parse `{v}`")))
}

impl RunConfig {
    /// Apply one override. Returns `Ok(false)` if the key is not a config key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<bool, HarnessError> {
        match key {
            "duration" => self.eval.duration = num(key, v)?,
            "tick_rate" => self.eval.tick_rate = num(key, v)?,
            "sample_count" => self.eval.sample_count = num(key, v)?,
            "k_v" => self.eval.k_v = num(key, v)?,
            "k_w" => self.eval.k_w = num(key, v)?,
            "omega" => self.fitness.omega = num(key, v)?,
            "epsilon" => self.fitness.epsilon = num(key, v)?,
            "bounds_lo" => self.bounds.lo = num(key, v)?,
            "bounds_hi" => self.bounds.hi = num(key, v)?,
            "bo_initial_samples" => self.bo.initial_samples = num(key, v)?,
            "bo_ucb_alpha" => self.bo.ucb_alpha = num(key, v)?,
            "bo_variance" => self.bo.kernel.variance = num(key, v)?,
            "bo_length_scale" => self.bo.kernel.length_scale = num(key, v)?,
            "bo_jitter" => self.bo.jitter = num(key, v)?,
            "bo_acq_candidates" => self.bo.acq_candidates = num(key, v)?,
            "bo_acq_refine_steps" => self.bo.acq_refine_steps = num(key, v)?,
            "neat_population" => self.neat.population = num(key, v)?,
            "neat_tournament_size" => self.neat.tournament_size = num(key, v)?,
            "neat_crossover_prob" => self.neat.crossover_prob = num(key, v)?,
            "neat_elitism" => self.neat.elitism = num(key, v)?,
            "neat_mutation_prob" => self.neat.rates.mutation_prob = num(key, v)?,
            "neat_add_connection" => self.neat.rates.add_connection = num(key, v)?,
            "neat_add_node" => self.neat.rates.add_node = num(key, v)?,
            "neat_weight_sigma" => self.neat.rates.weight_sigma = num(key, v)?,
            "neat_weight_reset" => self.neat.rates.weight_reset = num(key, v)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Build from a config file body; unknown keys are rejected.
    pub fn from_text(text: &str) -> Result<RunConfig, HarnessError> {
        let kv = parse_key_values(text).map_err(HarnessError::Usage)?;
        let mut cfg = RunConfig::default();
        for (k, v) in &kv {
            if !cfg.set(k, v)? {
                return Err(HarnessError::Usage(format!("unknown config key `{k}`")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.eval
            .validate()
            .map_err(|e| HarnessError::Usage(e.to_string()))?;
        self.bounds
            .validate()
            .map_err(|e| HarnessError::Usage(e.to_string()))?;
        if !(self.fitness.omega >= 0.0 && self.fitness.epsilon > 0.0) {
            return Err(HarnessError::Usage(
                "omega must be non-negative and epsilon positive".into(),
            ));
        }
        let mut bo = self.bo;
        bo.bounds = self.bounds;
        bo.validate()
            .map_err(|e| HarnessError::Usage(e.to_string()))?;
        self.neat
            .validate()
            .map_err(|e| HarnessError::Usage(e.to_string()))
    }

    /// Canonical text form; parsing it back yields an equal config.
    pub fn to_text(&self) -> String {
        let KernelParams {
            variance,
            length_scale,
        } = self.bo.kernel;
        let MutationRates {
            mutation_prob,
            add_connection,
            add_node,
            weight_sigma,
            weight_reset,
        } = self.neat.rates;
        let values: Vec<String> = vec![
            self.eval.duration.to_string(),
            self.eval.tick_rate.to_string(),
            self.eval.sample_count.to_string(),
            self.eval.k_v.to_string(),
            self.eval.k_w.to_string(),
            self.fitness.omega.to_string(),
            self.fitness.epsilon.to_string(),
            self.bounds.lo.to_string(),
            self.bounds.hi.to_string(),
            self.bo.initial_samples.to_string(),
            self.bo.ucb_alpha.to_string(),
            variance.to_string(),
            length_scale.to_string(),
            self.bo.jitter.to_string(),
            self.bo.acq_candidates.to_string(),
            self.bo.acq_refine_steps.to_string(),
            self.neat.population.to_string(),
            self.neat.tournament_size.to_string(),
            self.neat.crossover_prob.to_string(),
            self.neat.elitism.to_string(),
            mutation_prob.to_string(),
            add_connection.to_string(),
            add_node.to_string(),
            weight_sigma.to_string(),
            weight_reset.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
