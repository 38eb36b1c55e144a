//! Evaluation environments: controller in, sampled planar trajectory out.
//!
//! [`SurrogateEnvironment`] is a small kinematic stand-in for a physics
//! simulator. Each tick the change in every joint output pushes the body
//! along the lever from the core to that joint and turns it in proportion to
//! the joint's lateral offset. [`ScriptedEnvironment`] emits exact analytic
//! paths and exists for testing fitness code and learners.

use std::f64::consts::PI;

use thiserror::Error;

use crate::cpg::{CpgError, CpgNetwork, WeightVector};
use crate::fitness::{wrap_angle, FitnessError, Sample, Trajectory};

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error(transparent)]
    Cpg(#[from] CpgError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Seconds.
    pub duration: f64,
    /// Controller ticks per simulated second.
    pub tick_rate: f64,
    pub sample_count: usize,
    /// Metres of body-frame displacement per unit output change.
    pub k_v: f64,
    /// Radians of turn per unit output change per lateral grid cell.
    pub k_w: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            duration: 60.0,
            tick_rate: 8.0,
            sample_count: 10,
            k_v: 0.01,
            k_w: 0.012,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.duration > 0.0) {
            return Err(EnvError::InvalidConfig("duration must be positive".into()));
        }
        if !(self.tick_rate > 0.0) {
            return Err(EnvError::InvalidConfig("tick_rate must be positive".into()));
        }
        if self.sample_count < 2 {
            return Err(EnvError::InvalidConfig(
                "sample_count must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn ticks(&self) -> usize {
        (self.duration * self.tick_rate).round() as usize
    }

    /// Evenly spaced sample times from 0 to `duration` inclusive.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.sample_count;
        (0..n)
            .map(|k| self.duration * k as f64 / (n - 1) as f64)
            .collect()
    }
}

pub trait Environment: Send + Sync {
    fn evaluate(
        &self,
        net: &CpgNetwork,
        weights: &WeightVector,
        cfg: &EvalConfig,
    ) -> Result<Trajectory, EnvError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SurrogateEnvironment;

impl Environment for SurrogateEnvironment {
    fn evaluate(
        &self,
        net: &CpgNetwork,
        weights: &WeightVector,
        cfg: &EvalConfig,
    ) -> Result<Trajectory, EnvError> {
        surrogate_evaluate(net, weights, cfg)
    }
}

pub fn surrogate_evaluate(
    net: &CpgNetwork,
    weights: &WeightVector,
    cfg: &EvalConfig,
) -> Result<Trajectory, EnvError> {
    cfg.validate()?;
    let mut net = net.clone();
    net.set_weights(weights)?;
    net.reset();

    let levers: Vec<(f64, f64)> = net
        .oscillators()
        .iter()
        .map(|o| {
            let (gx, gy) = (o.cell.0 as f64, o.cell.1 as f64);
            let r = gx.hypot(gy);
            if r > 0.0 {
                (gx / r, gy / r)
            } else {
                (0.0, 0.0)
            }
        })
        .collect();
    let lateral: Vec<f64> = net.oscillators().iter().map(|o| o.cell.1 as f64).collect();

    let ticks = cfg.ticks();
    let dt = 1.0 / cfg.tick_rate;
    // positions[m] is the body position after m ticks
    let mut positions = Vec::with_capacity(ticks + 1);
    let (mut x, mut y, mut theta) = (0.0f64, 0.0f64, 0.0f64);
    positions.push((x, y));
    let mut prev = net.outputs();
    for _ in 0..ticks {
        let out = net.step()?;
        let (mut vx, mut vy, mut turn) = (0.0, 0.0, 0.0);
        for (k, (o, p)) in out.iter().zip(&prev).enumerate() {
            let d = o - p;
            vx += d * levers[k].0;
            vy += d * levers[k].1;
            turn += d * lateral[k];
        }
        let (s, c) = theta.sin_cos();
        x += cfg.k_v * (c * vx - s * vy);
        y += cfg.k_v * (s * vx + c * vy);
        theta = wrap_angle(theta + cfg.k_w * turn);
        positions.push((x, y));
        prev = out;
    }

    let samples = cfg
        .sample_times()
        .into_iter()
        .map(|t| {
            let (px, py) = interpolate(&positions, t / dt);
            Sample::new(t, px, py)
        })
        .collect();
    Ok(Trajectory::new(samples, 0.0)?)
}

/// Linear interpolation of a tick-indexed position series at fractional tick `u`.
fn interpolate(positions: &[(f64, f64)], u: f64) -> (f64, f64) {
    let last = positions.len() - 1;
    let u = u.clamp(0.0, last as f64);
    let i = (u.floor() as usize).min(last);
    let f = u - i as f64;
    if f == 0.0 || i == last {
        return positions[i];
    }
    let (a, b) = (positions[i], positions[i + 1]);
    (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1))
}

/// An analytic path starting at the origin and heading along +x.
#[derive(Debug, Clone, PartialEq)]
pub enum Script {
    Line {
        angle: f64,
        length: f64,
    },
    /// Positive sweep turns left.
    Arc {
        radius: f64,
        sweep: f64,
    },
    Polyline(Vec<(f64, f64)>),
}

impl Script {
    fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::InvalidScript(m.into()));
        match self {
            Script::Line { angle, length } => {
                if !angle.is_finite() || !length.is_finite() || *length < 0.0 {
                    return bad("line needs a finite angle and non-negative length");
                }
            }
            Script::Arc { radius, sweep } => {
                if !(radius.is_finite() && *radius > 0.0) || !sweep.is_finite() {
                    return bad("arc needs a positive radius and finite sweep");
                }
            }
            Script::Polyline(points) => {
                if points.len() < 2 {
                    return bad("polyline needs at least 2 points");
                }
                if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                    return bad("polyline points must be finite");
                }
            }
        }
        Ok(())
    }

    /// Position at path fraction `f` in [0, 1].
    fn point_at(&self, f: f64, cumulative: &[f64]) -> (f64, f64) {
        match self {
            Script::Line { angle, length } => {
                let (s, c) = angle.sin_cos();
                (c * length * f, s * length * f)
            }
            Script::Arc { radius, sweep } => {
                let phi = sweep * f;
                (
                    radius * phi.abs().sin(),
                    sweep.signum() * radius * (1.0 - phi.cos()),
                )
            }
            Script::Polyline(points) => {
                let total = *cumulative.last().unwrap();
                if total == 0.0 {
                    return points[0];
                }
                let target = f * total;
                let seg = cumulative
                    .windows(2)
                    .position(|w| target <= w[1])
                    .unwrap_or(points.len() - 2);
                let span = cumulative[seg + 1] - cumulative[seg];
                let g = if span > 0.0 {
                    (target - cumulative[seg]) / span
                } else {
                    0.0
                };
                let (a, b) = (points[seg], points[seg + 1]);
                (a.0 + g * (b.0 - a.0), a.1 + g * (b.1 - a.1))
            }
        }
    }
}

/// Sample a script at `cfg.sample_count` evenly spaced times. A polyline
/// with exactly `sample_count` vertices is emitted verbatim; otherwise it is
/// resampled by arc length.
pub fn scripted_evaluate(script: &Script, cfg: &EvalConfig) -> Result<Trajectory, EnvError> {
    cfg.validate()?;
    script.validate()?;
    let times = cfg.sample_times();
    let samples = match script {
        Script::Polyline(points) if points.len() == cfg.sample_count => times
            .iter()
            .zip(points)
            .map(|(&t, &(x, y))| Sample::new(t, x, y))
            .collect(),
        _ => {
            let cumulative = match script {
                Script::Polyline(points) => {
                    let mut acc = vec![0.0];
                    for w in points.windows(2) {
                        let l = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
                        acc.push(acc.last().unwrap() + l);
                    }
                    acc
                }
                _ => vec![],
            };
            times
                .iter()
                .map(|&t| {
                    let (x, y) = script.point_at(t / cfg.duration, &cumulative);
                    Sample::new(t, x, y)
                })
                .collect()
        }
    };
    Ok(Trajectory::new(samples, 0.0)?)
}

type ScriptFn = dyn Fn(&WeightVector) -> Script + Send + Sync;

/// Environment whose trajectory is a script computed from the weights alone.
pub struct ScriptedEnvironment {
    script: Box<ScriptFn>,
}

impl ScriptedEnvironment {
    pub fn new(script: impl Fn(&WeightVector) -> Script + Send + Sync + 'static) -> Self {
        ScriptedEnvironment {
            script: Box::new(script),
        }
    }

    /// A straight run whose directed-locomotion fitness (target 0 rad) equals
    /// `objective(w)` up to the epsilon in the length term: forward for
    /// positive values, backward with length scaled by (pi + 1) for negative.
    pub fn from_objective(objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScriptedEnvironment::new(move |w| {
            let v = objective(w.as_slice());
            if v >= 0.0 {
                Script::Line {
                    angle: 0.0,
                    length: v,
                }
            } else {
                Script::Line {
                    angle: PI,
                    length: -v * (PI + 1.0),
                }
            }
        })
    }
}

impl Environment for ScriptedEnvironment {
    fn evaluate(
        &self,
        net: &CpgNetwork,
        weights: &WeightVector,
        cfg: &EvalConfig,
    ) -> Result<Trajectory, EnvError> {
        if weights.len() != net.parameter_count() {
            return Err(CpgError::LengthMismatch {
                expected: net.parameter_count(),
                got: weights.len(),
            }
            .into());
        }
        scripted_evaluate(&(self.script)(weights), cfg)
    }
}
