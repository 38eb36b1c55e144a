use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::config::{parse_key_values, RunConfig};
use super::HarnessError;

pub const DEFAULT_DIRECTIONS: [f64; 5] = [40.0, 20.0, 0.0, -20.0, -40.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Learner {
    Bo,
    Neat,
    Random,
}

impl Learner {
    pub fn name(self) -> &'static str {
        match self {
            Learner::Bo => "bo",
            Learner::Neat => "neat",
            Learner::Random => "random",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Learner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bo" => Ok(Learner::Bo),
            "neat" => Ok(Learner::Neat),
            "random" => Ok(Learner::Random),
            _ => Err(format!(
                "unknown learner `{s}` (expected bo, neat or random)"
            )),
        }
    }
}

/// The experiment matrix: every robot × direction × learner × repetition.
///
/// Plan files use the config syntax. Plan keys are `robots`, `directions`,
/// `learners` (comma separated), `repetitions`, `budget` and `master_seed`;
/// any other key is a run-config override.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub robots: Vec<PathBuf>,
    /// Degrees.
    pub directions: Vec<f64>,
    pub learners: Vec<Learner>,
    pub repetitions: usize,
    pub budget: usize,
    pub master_seed: u64,
    pub config: RunConfig,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            robots: vec![],
            directions: DEFAULT_DIRECTIONS.to_vec(),
            learners: vec![Learner::Bo, Learner::Neat],
            repetitions: 10,
            budget: 1500,
            master_seed: 0,
            config: RunConfig::default(),
        }
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn usage<T>(m: String) -> Result<T, HarnessError> {
    Err(HarnessError::Usage(m))
}

impl ExperimentPlan {
    /// Parse a plan on top of `base` run config.
    pub fn parse(text: &str, base: RunConfig) -> Result<ExperimentPlan, HarnessError> {
        let kv = parse_key_values(text).map_err(HarnessError::Usage)?;
        let mut plan = ExperimentPlan {
            config: base,
            ..ExperimentPlan::default()
        };
        for (k, v) in &kv {
            match k.as_str() {
                "robots" => plan.robots = list(v).map(PathBuf::from).collect(),
                "directions" => {
                    plan.directions = list(v)
                        .map(|d| d.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .or_else(|_| usage(format!("directions: cannot parse `{v}`")))?
                }
                "learners" => {
                    plan.learners = list(v)
                        .map(Learner::from_str)
                        .collect::<Result<_, _>>()
                        .map_err(HarnessError::Usage)?
                }
                "repetitions" => {
                    plan.repetitions = v
                        .parse()
                        .or_else(|_| usage(format!("repetitions: cannot parse `{v}`")))?
                }
                "budget" => {
                    plan.budget = v
                        .parse()
                        .or_else(|_| usage(format!("budget: cannot parse `{v}`")))?
                }
                "master_seed" => {
                    plan.master_seed = v
                        .parse()
                        .or_else(|_| usage(format!("master_seed: cannot parse `{v}`")))?
                }
                _ => {
                    if !plan.config.set(k, v)? {
                        return usage(format!("unknown plan key `{k}`"));
                    }
                }
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.robots.is_empty() {
            return usage("plan lists no robots".into());
        }
        if self.directions.is_empty() || self.learners.is_empty() {
            return usage("plan needs at least one direction and one learner".into());
        }
        if let Some(d) = self
            .directions
            .iter()
            .find(|d| !(**d > -180.0 && **d <= 180.0))
        {
            return usage(format!("direction {d} outside (-180, 180]"));
        }
        if self.repetitions == 0 {
            return usage("repetitions must be at least 1".into());
        }
        if self.budget == 0 {
            return usage("budget must be positive".into());
        }
        self.config.validate()
    }

    pub fn cell_count(&self) -> usize {
        self.robots.len() * self.directions.len() * self.learners.len() * self.repetitions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_plan() {
        let p = ExperimentPlan::parse(
            "robots = a.morph, b.morph\ndirections = 20, -20\nlearners = bo, random\n\
             repetitions = 3\nbudget = 300\nmaster_seed = 9\nk_v = 0.02\n",
            RunConfig::default(),
        )
        .unwrap();
        assert_eq!(p.robots.len(), 2);
        assert_eq!(p.directions, vec![20.0, -20.0]);
        assert_eq!(p.learners, vec![Learner::Bo, Learner::Random]);
        assert_eq!(p.cell_count(), 2 * 2 * 2 * 3);
        assert_eq!(p.config.eval.k_v, 0.02);
    }

    #[test]
    fn defaults_follow_protocol() {
        let p = ExperimentPlan::parse("robots = a.morph", RunConfig::default()).unwrap();
        assert_eq!(p.directions, DEFAULT_DIRECTIONS.to_vec());
        assert_eq!(p.repetitions, 10);
        assert_eq!(p.budget, 1500);
    }

    #[test]
    fn rejects_invalid_plans() {
        let base = RunConfig::default();
        assert!(ExperimentPlan::parse("robots =", base).is_err());
        assert!(ExperimentPlan::parse("robots = a\nlearners = sgd", base).is_err());
        assert!(ExperimentPlan::parse("robots = a\ndirections = -180", base).is_err());
        assert!(ExperimentPlan::parse("robots = a\nrepetitions = 0", base).is_err());
        assert!(ExperimentPlan::parse("robots = a\nfoo = 1", base).is_err());
    }

    #[test]
    fn learner_names_round_trip() {
        for l in [Learner::Bo, Learner::Neat, Learner::Random] {
            assert_eq!(l.name().parse::<Learner>().unwrap(), l);
        }
    }
}
