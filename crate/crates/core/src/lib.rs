//! Directed-locomotion learning for modular robots.
//!
//! A body plan ([`morphology`]) compiles into a network of coupled
//! oscillators ([`cpg`]). An [`environment`] turns a weight vector into a
//! sampled trajectory, [`fitness`] scores that trajectory against a target
//! direction, and two learners search the weight space: Gaussian-process
//! Bayesian optimization ([`bayesopt`]) and CPPN neuroevolution
//! ([`hyperneat`]). [`harness`] runs experiment matrices and writes reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayesopt;
pub mod cpg;
pub mod environment;
pub mod fitness;
pub mod harness;
pub mod hyperneat;
pub mod learn;
pub mod morphology;

pub use cpg::{build_network, CpgNetwork, WeightCoordinate, WeightVector};
pub use environment::{Environment, EvalConfig, ScriptedEnvironment, SurrogateEnvironment};
pub use fitness::{evaluate_fitness, DirectionSpec, FitnessBreakdown, FitnessParams, Trajectory};
pub use learn::{Bounds, EvaluationLog, Evaluator, LearnError};
pub use morphology::{parse_morphology, MorphologyTree};
