//! Indirect encoding of CPG weights with evolved CPPNs.
//!
//! Each genome is queried once per weight coordinate of the network; the
//! resulting vector is scored in the environment and that score becomes the
//! genome's fitness. Evolution is generational with tournament selection,
//! crossover, mutation and a single elite, without speciation.

mod genome;

pub use genome::{
    crossover, mutate, Activation, ConnectionGene, Genome, GenomeError, InnovationCounter,
    MutationRates, NodeGene, NodeRole, BIAS_NODE, FIRST_HIDDEN, HIDDEN_ACTIVATIONS, INPUT_COUNT,
    OUTPUT_NODE,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cpg::{CpgNetwork, WeightCoordinate, WeightVector};
use crate::learn::{EvaluationLog, Evaluator, LearnError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeatConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    pub elitism: usize,
    pub rates: MutationRates,
    pub seed: u64,
}

impl Default for NeatConfig {
    fn default() -> Self {
        NeatConfig {
            population: 20,
            generations: 75,
            tournament_size: 4,
            crossover_prob: 0.75,
            elitism: 1,
            rates: MutationRates::default(),
            seed: 0,
        }
    }
}

impl NeatConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let err = |m: &str| Err(LearnError::Config(m.into()));
        if self.population == 0 || self.generations == 0 {
            return err("population and generations must be positive");
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return err("tournament_size must be in 1..=population");
        }
        if self.elitism >= self.population {
            return err("elitism must be smaller than the population");
        }
        if !(self.rates.weight_sigma >= 0.0 && self.rates.weight_sigma.is_finite()) {
            return err("weight_sigma must be finite and non-negative");
        }
        Ok(())
    }

    /// Environment evaluations performed by a full run.
    pub fn evaluation_count(&self) -> usize {
        self.population + (self.generations - 1) * (self.population - self.elitism)
    }
}

pub fn cppn_query(genome: &Genome, coord: &WeightCoordinate) -> Result<f64, GenomeError> {
    genome.query(coord)
}

/// Query the genome at every canonical weight coordinate of `net`.
pub fn decode(genome: &Genome, net: &CpgNetwork) -> Result<WeightVector, GenomeError> {
    net.weight_coordinates()
        .iter()
        .map(|c| genome.query(c))
        .collect::<Result<Vec<_>, _>>()
        .map(WeightVector)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    /// 1-based.
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_genome: Genome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeatTrace {
    pub generations: Vec<GenerationRecord>,
    pub log: EvaluationLog,
}

fn tournament<R: Rng>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

fn summarize(generation: usize, pop: &[(Genome, f64)]) -> GenerationRecord {
    let (best_i, _) = pop
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, (_, f))| {
            if *f > acc.1 {
                (i, *f)
            } else {
                acc
            }
        });
    GenerationRecord {
        generation,
        best_fitness: pop[best_i].1,
        mean_fitness: pop.iter().map(|(_, f)| f).sum::<f64>() / pop.len() as f64,
        best_genome: pop[best_i].0.clone(),
    }
}

/// Decode and score a batch of genomes in parallel, appending to `log` in order.
fn evaluate_batch(
    ev: &Evaluator<'_>,
    genomes: Vec<Genome>,
    log: &mut EvaluationLog,
) -> Result<Vec<(Genome, f64)>, LearnError> {
    let weights: Vec<WeightVector> = genomes
        .iter()
        .map(|g| decode(g, ev.net))
        .collect::<Result<_, _>>()
        .map_err(|e| LearnError::Config(format!("genome decode failed: {e}")))?;
    let scored: Vec<_> = weights.par_iter().map(|w| ev.score(w)).collect();
    let mut out = Vec::with_capacity(genomes.len());
    for ((g, w), s) in genomes.into_iter().zip(weights).zip(scored) {
        match s {
            Ok((b, traj)) => {
                out.push((g, b.fitness));
                log.push(w, b, traj);
            }
            Err(source) => {
                return Err(LearnError::Environment {
                    index: log.len() + 1,
                    source,
                    partial: Box::new(log.clone()),
                })
            }
        }
    }
    Ok(out)
}

pub fn neat_learn(ev: &Evaluator<'_>, cfg: &NeatConfig) -> Result<NeatTrace, LearnError> {
    cfg.validate()?;
    if ev.dimension() == 0 {
        return Err(LearnError::Config("network has no free parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut innovations = InnovationCounter::new();
    let mut log = EvaluationLog::new();

    let initial: Vec<Genome> = (0..cfg.population)
        .map(|_| Genome::minimal(&mut rng, &mut innovations))
        .collect();
    let mut pop = evaluate_batch(ev, initial, &mut log)?;
    let mut generations = vec![summarize(1, &pop)];

    for gen in 2..=cfg.generations {
        let fitness: Vec<f64> = pop.iter().map(|(_, f)| *f).collect();
        let children: Vec<Genome> = (0..cfg.population - cfg.elitism)
            .map(|_| {
                let a = tournament(&fitness, cfg.tournament_size, &mut rng);
                let base = if rng.gen::<f64>() < cfg.crossover_prob {
                    let b = tournament(&fitness, cfg.tournament_size, &mut rng);
                    crossover(&pop[a].0, &pop[b].0, fitness[a], fitness[b], &mut rng)
                } else {
                    pop[a].0.clone()
                };
                mutate(&base, &cfg.rates, &mut rng, &mut innovations)
            })
            .collect();
        let offspring = evaluate_batch(ev, children, &mut log)?;

        let mut pool: Vec<(Genome, f64)> = pop.into_iter().chain(offspring).collect();
        // Stable sort keeps earlier pool entries first among equals.
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&i, &j| pool[j].1.total_cmp(&pool[i].1));
        let elite_ids: Vec<usize> = order[..cfg.elitism].to_vec();
        let mut next: Vec<(Genome, f64)> = elite_ids.iter().map(|&i| pool[i].clone()).collect();
        let rest: Vec<usize> = (0..pool.len()).filter(|i| !elite_ids.contains(i)).collect();
        let rest_fitness: Vec<f64> = rest.iter().map(|&i| pool[i].1).collect();
        let k = cfg.tournament_size.min(rest.len());
        for _ in 0..cfg.population - cfg.elitism {
            let pick = rest[tournament(&rest_fitness, k, &mut rng)];
            next.push(pool[pick].clone());
        }
        pool.clear();
        pop = next;
        generations.push(summarize(gen, &pop));
    }
    Ok(NeatTrace { generations, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpg::Oscillator;
    use crate::environment::{EvalConfig, ScriptedEnvironment};
    use crate::fitness::{DirectionSpec, FitnessParams};

    fn two_joint_net() -> CpgNetwork {
        let osc = |id: &str, cell: (i32, i32)| Oscillator {
            joint_id: id.into(),
            cell,
            coord: (cell.0 as f64 / 2.0, cell.1 as f64 / 2.0),
            x: 0.0,
            y: 0.0,
        };
        CpgNetwork::from_parts(vec![osc("a", (1, 0)), osc("b", (2, 0))], vec![(0, 1)])
    }

    #[test]
    fn disabled_gene_does_not_change_decoding() {
        let net = two_joint_net();
        let base = vec![ConnectionGene {
            innovation: 0,
            from: 0,
            to: OUTPUT_NODE,
            weight: 0.9,
            enabled: true,
        }];
        let mut extra = base.clone();
        extra.push(ConnectionGene {
            innovation: 1,
            from: 3,
            to: OUTPUT_NODE,
            weight: -5.0,
            enabled: false,
        });
        let a = decode(&Genome::from_genes(&[], base), &net).unwrap();
        let b = decode(&Genome::from_genes(&[], extra), &net).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn single_generation_is_initial_population() {
        let net = two_joint_net();
        let env = ScriptedEnvironment::from_objective(|w| -w.iter().map(|v| v * v).sum::<f64>());
        let ev = Evaluator::new(
            &net,
            &env,
            EvalConfig::default(),
            DirectionSpec { beta0: 0.0 },
            FitnessParams::default(),
        );
        let cfg = NeatConfig {
            generations: 1,
            seed: 3,
            ..NeatConfig::default()
        };
        let t = neat_learn(&ev, &cfg).unwrap();
        assert_eq!(t.generations.len(), 1);
        assert_eq!(t.log.len(), cfg.population);
    }

    #[test]
    fn evaluation_budget_matches_formula() {
        let cfg = NeatConfig::default();
        assert_eq!(cfg.evaluation_count(), 20 + 74 * 19);
        let net = two_joint_net();
        let env = ScriptedEnvironment::from_objective(|w| w[0]);
        let ev = Evaluator::new(
            &net,
            &env,
            EvalConfig::default(),
            DirectionSpec { beta0: 0.0 },
            FitnessParams::default(),
        );
        let small = NeatConfig {
            generations: 4,
            population: 6,
            ..cfg
        };
        let t = neat_learn(&ev, &small).unwrap();
        assert_eq!(t.log.len(), small.evaluation_count());
    }

    #[test]
    fn config_validation() {
        let bad = NeatConfig {
            tournament_size: 30,
            ..NeatConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
