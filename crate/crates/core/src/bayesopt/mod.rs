//! Gaussian-process Bayesian optimization of CPG weights.
//!
//! The loop seeds the model with a Latin hypercube design, then repeatedly
//! maximises an upper-confidence-bound acquisition over the unit cube,
//! evaluates the proposal, and refits the GP from scratch. The GP lives in
//! normalized coordinates; weights are mapped into the configured bounds
//! only for evaluation.

mod gp;
mod lhs;

pub use gp::{
    deduplicate, gp_fit, gp_predict, gram_matrix, matern52, GpError, GpModel, KernelParams,
    DUPLICATE_RADIUS, MAX_JITTER,
};
pub use lhs::{lhs_sample, lhs_sample_with};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::learn::{Bounds, EvaluationLog, Evaluator, LearnError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoConfig {
    pub initial_samples: usize,
    pub iterations: usize,
    pub ucb_alpha: f64,
    pub kernel: KernelParams,
    pub bounds: Bounds,
    pub jitter: f64,
    pub acq_candidates: usize,
    pub acq_refine_steps: usize,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            initial_samples: 50,
            iterations: 1450,
            ucb_alpha: 3.0,
            kernel: KernelParams::default(),
            bounds: Bounds::default(),
            jitter: 1e-6,
            acq_candidates: 1000,
            acq_refine_steps: 50,
            seed: 0,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let err = |m: &str| Err(LearnError::Config(m.into()));
        if self.initial_samples < 2 {
            return err("initial_samples must be at least 2");
        }
        if self.acq_candidates == 0 {
            return err("acq_candidates must be positive");
        }
        if !(self.kernel.variance > 0.0 && self.kernel.length_scale > 0.0) {
            return err("kernel variance and length scale must be positive");
        }
        if !(self.jitter >= 0.0) || !(self.ucb_alpha >= 0.0) {
            return err("jitter and ucb_alpha must be non-negative");
        }
        self.bounds.validate()
    }

    pub fn budget(&self) -> usize {
        self.initial_samples + self.iterations
    }
}

pub fn ucb(mu: f64, sigma2: f64, alpha: f64) -> f64 {
    mu + alpha * sigma2.sqrt()
}

/// Maximise UCB over the unit cube: best of `acq_candidates` uniform draws,
/// then coordinate-wise hill climbing with a halving step.
pub fn propose<R: Rng>(
    model: &GpModel,
    cfg: &BoConfig,
    rng: &mut R,
) -> Result<Vec<f64>, LearnError> {
    if cfg.acq_candidates == 0 {
        return Err(LearnError::Config("acq_candidates must be positive".into()));
    }
    let d = model.dim();
    let mut scratch = Vec::with_capacity(model.len());
    let mut score = |q: &[f64]| {
        let (mu, s2) = model.predict_with(q, &mut scratch);
        ucb(mu, s2, cfg.ucb_alpha)
    };

    let mut best = vec![0.0; d];
    let mut best_val = f64::NEG_INFINITY;
    let mut cand = vec![0.0; d];
    for _ in 0..cfg.acq_candidates {
        for c in cand.iter_mut() {
            *c = rng.gen();
        }
        let v = score(&cand);
        if v > best_val {
            best_val = v;
            best.copy_from_slice(&cand);
        }
    }

    let mut step = 0.1;
    for _ in 0..cfg.acq_refine_steps {
        let mut improved = false;
        for k in 0..d {
            for delta in [step, -step] {
                let old = best[k];
                best[k] = (old + delta).clamp(0.0, 1.0);
                let v = score(&best);
                if v > best_val {
                    best_val = v;
                    improved = true;
                    break;
                }
                best[k] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoTrace {
    pub log: EvaluationLog,
    /// Evaluations that came from the initial design.
    pub initial_samples: usize,
}

/// Run the full optimization loop; `cfg.budget()` evaluations in total.
pub fn bo_learn(ev: &Evaluator<'_>, cfg: &BoConfig) -> Result<BoTrace, LearnError> {
    cfg.validate()?;
    let d = ev.dimension();
    if d == 0 {
        return Err(LearnError::Config("network has no free parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_init = cfg.initial_samples.min(cfg.budget());
    let design = lhs_sample_with(n_init, d, &mut rng);

    let mut log = EvaluationLog::new();
    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(cfg.budget());
    let mut targets = Vec::with_capacity(cfg.budget());
    for unit in design {
        let f = log.evaluate(ev, cfg.bounds.denormalize(&unit))?;
        inputs.push(unit);
        targets.push(f);
    }

    for _ in 0..cfg.iterations {
        let model = gp_fit(&inputs, &targets, cfg.kernel, cfg.jitter)
            .map_err(|e| LearnError::Config(format!("surrogate fit failed: {e}")))?;
        let unit = propose(&model, cfg, &mut rng)?;
        let f = log.evaluate(ev, cfg.bounds.denormalize(&unit))?;
        inputs.push(unit);
        targets.push(f);
    }
    Ok(BoTrace {
        log,
        initial_samples: n_init,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ucb_cases() {
        assert_eq!(ucb(0.7, 0.3, 0.0), 0.7);
        assert_relative_eq!(ucb(0.5, 0.04, 3.0), 1.1, epsilon = 1e-12);
        assert_eq!(ucb(-0.2, 0.0, 3.0), -0.2);
    }

    #[test]
    fn zero_candidates_is_config_error() {
        let m = gp_fit(&[vec![0.5]], &[1.0], KernelParams::default(), 1e-6).unwrap();
        let cfg = BoConfig {
            acq_candidates: 0,
            ..BoConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            propose(&m, &cfg, &mut rng),
            Err(LearnError::Config(_))
        ));
    }

    #[test]
    fn exploration_moves_away_from_single_observation() {
        let m = gp_fit(&[vec![0.5, 0.5]], &[0.0], KernelParams::default(), 1e-6).unwrap();
        let cfg = BoConfig {
            ucb_alpha: 100.0,
            ..BoConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = propose(&m, &cfg, &mut rng).unwrap();
        let dist = ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt();
        assert!(dist > 0.2, "{p:?}");
    }
}
