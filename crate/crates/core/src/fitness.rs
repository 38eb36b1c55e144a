//! Directed-locomotion fitness.
//!
//! A run is scored from its start point `p0`, end point `p1` and the full
//! sampled path. The end point is projected onto the target line through
//! `p0`; progress along that line is rewarded, the lateral offset and the
//! deviation angle are penalised, and the result is scaled by how straight
//! the path was.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use thiserror::Error;

pub const DEFAULT_OMEGA: f64 = 0.01;
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum FitnessError {
    #[error("trajectory needs at least 2 samples, got {0}")]
    DegenerateTrajectory(usize),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Sample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Sample { t, x, y }
    }

    fn point(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    initial_orientation: f64,
}

impl Trajectory {
    /// Validates `samples[0].t == 0` and strictly increasing timestamps.
    pub fn new(samples: Vec<Sample>, initial_orientation: f64) -> Result<Self, FitnessError> {
        if samples.len() < 2 {
            return Err(FitnessError::DegenerateTrajectory(samples.len()));
        }
        if samples[0].t != 0.0 {
            return Err(FitnessError::InvalidTrajectory(format!(
                "first sample at t = {}, expected 0",
                samples[0].t
            )));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(FitnessError::InvalidTrajectory(
                "timestamps must be strictly increasing".into(),
            ));
        }
        if samples
            .iter()
            .any(|s| !(s.x.is_finite() && s.y.is_finite()))
            || !initial_orientation.is_finite()
        {
            return Err(FitnessError::InvalidTrajectory("non-finite value".into()));
        }
        Ok(Trajectory {
            samples,
            initial_orientation: wrap_angle(initial_orientation),
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn initial_orientation(&self) -> f64 {
        self.initial_orientation
    }

    pub fn start(&self) -> (f64, f64) {
        self.samples[0].point()
    }

    pub fn end(&self) -> (f64, f64) {
        self.samples[self.samples.len() - 1].point()
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].t - self.samples[0].t
    }

    /// `t,x,y` rows after a comment line carrying the initial orientation.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# initial_orientation_rad={:.16e}\nt,x,y\n",
            self.initial_orientation
        );
        for s in &self.samples {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", s.t, s.x, s.y));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, FitnessError> {
        let bad = |m: String| FitnessError::InvalidTrajectory(m);
        let mut orientation = 0.0;
        let mut samples = vec![];
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("initial_orientation_rad=") {
                    orientation = v
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("bad orientation `{v}`")))?;
                }
                continue;
            }
            if line == "t,x,y" {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(format!("bad row `{line}`")))?;
            let [t, x, y] = vals.as_slice() else {
                return Err(bad(format!("expected 3 columns in `{line}`")));
            };
            samples.push(Sample::new(*t, *x, *y));
        }
        Trajectory::new(samples, orientation)
    }

    /// Rigid rotation of positions and orientation about the origin.
    pub fn rotated(&self, angle: f64) -> Trajectory {
        let (s, c) = angle.sin_cos();
        Trajectory {
            samples: self
                .samples
                .iter()
                .map(|p| Sample::new(p.t, c * p.x - s * p.y, s * p.x + c * p.y))
                .collect(),
            initial_orientation: wrap_angle(self.initial_orientation + angle),
        }
    }
}

/// Target direction relative to the robot's initial orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionSpec {
    pub beta0: f64,
}

impl DirectionSpec {
    pub fn from_degrees(deg: f64) -> Self {
        DirectionSpec {
            beta0: wrap_angle(deg.to_radians()),
        }
    }

    pub fn degrees(&self) -> f64 {
        self.beta0.to_degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessParams {
    pub omega: f64,
    pub epsilon: f64,
}

impl Default for FitnessParams {
    fn default() -> Self {
        FitnessParams {
            omega: DEFAULT_OMEGA,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessBreakdown {
    pub beta1: f64,
    pub delta: f64,
    pub distance_d: f64,
    pub penalty_p: f64,
    pub path_length_l: f64,
    pub fitness_naive: f64,
    pub fitness: f64,
    /// Projected distance per minute.
    pub speed: f64,
}

impl FitnessBreakdown {
    pub const CSV_HEADER: &'static str =
        "beta1,delta,distance_d,penalty_p,path_length_l,fitness_naive,fitness,speed";

    pub fn to_csv_row(&self) -> String {
        [
            self.beta1,
            self.delta,
            self.distance_d,
            self.penalty_p,
            self.path_length_l,
            self.fitness_naive,
            self.fitness,
            self.speed,
        ]
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Wrap into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Smallest absolute angle between two directions, in [0, pi].
pub fn deviation(beta0: f64, beta1: f64) -> f64 {
    let diff = (beta1 - beta0).abs().rem_euclid(TAU);
    if diff > PI {
        TAU - diff
    } else {
        diff
    }
}

/// Projection of `p1` onto the line through `p0` with direction `line_angle`,
/// and the signed distance from `p0` to it (negative once `delta` reaches pi/2).
pub fn projected_distance(
    p0: (f64, f64),
    p1: (f64, f64),
    line_angle: f64,
    delta: f64,
) -> ((f64, f64), f64) {
    let (uy, ux) = line_angle.sin_cos();
    let along = (p1.0 - p0.0) * ux + (p1.1 - p0.1) * uy;
    let p = (p0.0 + along * ux, p0.1 + along * uy);
    let dist = (p.0 - p0.0).hypot(p.1 - p0.1);
    let sign = if delta < FRAC_PI_2 { 1.0 } else { -1.0 };
    (p, sign * dist)
}

pub fn lateral_penalty(p1: (f64, f64), p: (f64, f64), omega: f64) -> f64 {
    omega * (p1.0 - p.0).hypot(p1.1 - p.1)
}

pub fn path_length(traj: &Trajectory) -> f64 {
    traj.samples
        .windows(2)
        .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
        .sum()
}

pub fn evaluate_fitness(
    traj: &Trajectory,
    dir: DirectionSpec,
    params: FitnessParams,
) -> FitnessBreakdown {
    let p0 = traj.start();
    let p1 = traj.end();
    let line_angle = wrap_angle(traj.initial_orientation + dir.beta0);
    let path_length_l = path_length(traj);
    let minutes = traj.duration() / 60.0;

    if p1 == p0 {
        let beta1 = traj.initial_orientation;
        return FitnessBreakdown {
            beta1,
            delta: deviation(line_angle, beta1),
            distance_d: 0.0,
            penalty_p: 0.0,
            path_length_l,
            fitness_naive: 0.0,
            fitness: 0.0,
            speed: 0.0,
        };
    }

    let beta1 = (p1.1 - p0.1).atan2(p1.0 - p0.0);
    let delta = deviation(line_angle, beta1);
    let (p, distance_d) = projected_distance(p0, p1, line_angle, delta);
    let penalty_p = lateral_penalty(p1, p, params.omega);
    let fitness_naive = distance_d / (delta + 1.0) - penalty_p;
    let fitness = distance_d.abs() / (path_length_l + params.epsilon) * fitness_naive;
    FitnessBreakdown {
        beta1,
        delta,
        distance_d,
        penalty_p,
        path_length_l,
        fitness_naive,
        fitness,
        speed: if minutes > 0.0 {
            distance_d / minutes
        } else {
            0.0
        },
    }
}

/// Fallible wrapper for raw sample lists.
pub fn evaluate_samples(
    samples: Vec<Sample>,
    initial_orientation: f64,
    dir: DirectionSpec,
    params: FitnessParams,
) -> Result<FitnessBreakdown, FitnessError> {
    let traj = Trajectory::new(samples, initial_orientation)?;
    Ok(evaluate_fitness(&traj, dir, params))
}
