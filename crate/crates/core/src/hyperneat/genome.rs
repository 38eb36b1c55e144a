use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::cpg::WeightCoordinate;

pub const INPUT_COUNT: usize = 6;
pub const BIAS_NODE: usize = INPUT_COUNT;
pub const OUTPUT_NODE: usize = INPUT_COUNT + 1;
/// First id handed out to hidden nodes.
pub const FIRST_HIDDEN: usize = INPUT_COUNT + 2;

#[derive(Debug, Error, PartialEq)]
pub enum GenomeError {
    #[error("genome contains a cycle")]
    CyclicGenome,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Sine,
    Gaussian,
    Sigmoid,
    Linear,
    Abs,
    Tanh,
}

/// Activations a new hidden node may draw from.
pub const HIDDEN_ACTIVATIONS: [Activation; 5] = [
    Activation::Sine,
    Activation::Gaussian,
    Activation::Sigmoid,
    Activation::Linear,
    Activation::Abs,
];

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sine => x.sin(),
            Activation::Gaussian => (-x * x).exp(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Linear => x,
            Activation::Abs => x.abs(),
            Activation::Tanh => x.tanh(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Sine => "sine",
            Activation::Gaussian => "gaussian",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
            Activation::Abs => "abs",
            Activation::Tanh => "tanh",
        }
    }
}

impl FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "sine" => Activation::Sine,
            "gaussian" => Activation::Gaussian,
            "sigmoid" => Activation::Sigmoid,
            "linear" => Activation::Linear,
            "abs" => Activation::Abs,
            "tanh" => Activation::Tanh,
            _ => return Err(format!("unknown activation `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    /// 1-based coordinate index.
    Input(u8),
    Bias,
    Hidden,
    Output,
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRole::Input(i) => write!(f, "input{i}"),
            NodeRole::Bias => f.write_str("bias"),
            NodeRole::Hidden => f.write_str("hidden"),
            NodeRole::Output => f.write_str("output"),
        }
    }
}

impl FromStr for NodeRole {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bias" => Ok(NodeRole::Bias),
            "hidden" => Ok(NodeRole::Hidden),
            "output" => Ok(NodeRole::Output),
            _ => s
                .strip_prefix("input")
                .and_then(|i| i.parse::<u8>().ok())
                .filter(|i| (1..=INPUT_COUNT as u8).contains(i))
                .map(NodeRole::Input)
                .ok_or_else(|| format!("unknown node role `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGene {
    pub id: usize,
    pub role: NodeRole,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionGene {
    pub innovation: usize,
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub enabled: bool,
}

/// Run-wide registry that hands out innovation numbers and hidden node ids.
/// The same structural change always receives the same number.
#[derive(Debug, Clone)]
pub struct InnovationCounter {
    next_innovation: usize,
    next_node: usize,
    connections: HashMap<(usize, usize), usize>,
    splits: HashMap<usize, usize>,
}

impl Default for InnovationCounter {
    fn default() -> Self {
        Self::new()
    }
}

impl InnovationCounter {
    pub fn new() -> Self {
        InnovationCounter {
            next_innovation: 0,
            next_node: FIRST_HIDDEN,
            connections: HashMap::new(),
            splits: HashMap::new(),
        }
    }

    pub fn connection(&mut self, from: usize, to: usize) -> usize {
        *self.connections.entry((from, to)).or_insert_with(|| {
            self.next_innovation += 1;
            self.next_innovation - 1
        })
    }

    /// Node id for splitting connection `innovation`; a fresh id if the
    /// recorded one already exists in the genome being mutated.
    fn split_node(&mut self, innovation: usize, taken: impl Fn(usize) -> bool) -> usize {
        if let Some(&n) = self.splits.get(&innovation) {
            if !taken(n) {
                return n;
            }
        }
        let n = self.next_node;
        self.next_node += 1;
        self.splits.entry(innovation).or_insert(n);
        n
    }
}

/// Compositional pattern-producing network over the 6-D weight coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    /// Keyed by node id.
    nodes: BTreeMap<usize, NodeGene>,
    /// Sorted by innovation.
    connections: Vec<ConnectionGene>,
}

impl Genome {
    fn io_nodes() -> BTreeMap<usize, NodeGene> {
        let mut nodes = BTreeMap::new();
        for i in 0..INPUT_COUNT {
            nodes.insert(
                i,
                NodeGene {
                    id: i,
                    role: NodeRole::Input(i as u8 + 1),
                    activation: Activation::Linear,
                },
            );
        }
        nodes.insert(
            BIAS_NODE,
            NodeGene {
                id: BIAS_NODE,
                role: NodeRole::Bias,
                activation: Activation::Linear,
            },
        );
        nodes.insert(
            OUTPUT_NODE,
            NodeGene {
                id: OUTPUT_NODE,
                role: NodeRole::Output,
                activation: Activation::Tanh,
            },
        );
        nodes
    }

    /// Inputs and bias wired straight to the output with weights `U[-1, 1]`.
    pub fn minimal<R: Rng>(rng: &mut R, innovations: &mut InnovationCounter) -> Genome {
        let connections = (0..=BIAS_NODE)
            .map(|from| ConnectionGene {
                innovation: innovations.connection(from, OUTPUT_NODE),
                from,
                to: OUTPUT_NODE,
                weight: rng.gen_range(-1.0..=1.0),
                enabled: true,
            })
            .collect();
        let mut g = Genome {
            nodes: Self::io_nodes(),
            connections,
        };
        g.sort();
        g
    }

    /// Build from explicit genes; hidden nodes must be listed, I/O nodes are implied.
    pub fn from_genes(hidden: &[NodeGene], connections: Vec<ConnectionGene>) -> Genome {
        let mut nodes = Self::io_nodes();
        for n in hidden {
            nodes.insert(n.id, *n);
        }
        let mut g = Genome { nodes, connections };
        g.sort();
        g
    }

    fn sort(&mut self) {
        self.connections.sort_by_key(|c| c.innovation);
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeGene> {
        self.nodes.values()
    }

    pub fn connections(&self) -> &[ConnectionGene] {
        &self.connections
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes
            .values()
            .filter(|n| n.role == NodeRole::Hidden)
            .count()
    }

    /// Node ids in evaluation order over enabled connections.
    fn topological_order(&self) -> Result<Vec<usize>, GenomeError> {
        let mut indegree: HashMap<usize, usize> = self.nodes.keys().map(|&k| (k, 0)).collect();
        let mut out: HashMap<usize, Vec<usize>> = HashMap::new();
        for c in self.connections.iter().filter(|c| c.enabled) {
            *indegree.entry(c.to).or_default() += 1;
            out.entry(c.from).or_default().push(c.to);
        }
        let mut ready: Vec<usize> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&k, _)| k)
            .collect();
        ready.sort_unstable_by(|a, b| b.cmp(a));
        let mut order = Vec::with_capacity(indegree.len());
        while let Some(n) = ready.pop() {
            order.push(n);
            if let Some(next) = out.get(&n) {
                for &m in next {
                    let d = indegree.get_mut(&m).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.push(m);
                    }
                }
            }
        }
        if order.len() == indegree.len() {
            Ok(order)
        } else {
            Err(GenomeError::CyclicGenome)
        }
    }

    /// Would adding `from -> to` close a cycle among enabled and disabled genes?
    fn creates_cycle(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut stack = vec![to];
        let mut seen = HashSet::new();
        while let Some(n) = stack.pop() {
            if n == from {
                return true;
            }
            if seen.insert(n) {
                stack.extend(
                    self.connections
                        .iter()
                        .filter(|c| c.from == n)
                        .map(|c| c.to),
                );
            }
        }
        false
    }

    /// Evaluate the network at one coordinate. The output is tanh-squashed.
    pub fn query(&self, coord: &WeightCoordinate) -> Result<f64, GenomeError> {
        let inputs = coord.as_array();
        let order = self.topological_order()?;
        let mut incoming: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for c in self.connections.iter().filter(|c| c.enabled) {
            incoming.entry(c.to).or_default().push((c.from, c.weight));
        }
        let mut value: HashMap<usize, f64> = HashMap::with_capacity(order.len());
        for id in order {
            let node = &self.nodes[&id];
            let v = match node.role {
                NodeRole::Input(i) => inputs[i as usize - 1],
                NodeRole::Bias => 1.0,
                NodeRole::Hidden | NodeRole::Output => {
                    let sum: f64 = incoming
                        .get(&id)
                        .map(|ins| ins.iter().map(|(f, w)| value[f] * w).sum())
                        .unwrap_or(0.0);
                    node.activation.apply(sum)
                }
            };
            value.insert(id, v);
        }
        Ok(value[&OUTPUT_NODE])
    }

    /// Split a random enabled connection through a new hidden node.
    pub fn add_node<R: Rng>(&mut self, rng: &mut R, innovations: &mut InnovationCounter) -> bool {
        let enabled: Vec<usize> = (0..self.connections.len())
            .filter(|&i| self.connections[i].enabled)
            .collect();
        let Some(&pick) = enabled.choose(rng) else {
            return false;
        };
        let old = self.connections[pick];
        self.connections[pick].enabled = false;
        let node = innovations.split_node(old.innovation, |n| self.nodes.contains_key(&n));
        let activation = *HIDDEN_ACTIVATIONS.choose(rng).unwrap();
        self.nodes.insert(
            node,
            NodeGene {
                id: node,
                role: NodeRole::Hidden,
                activation,
            },
        );
        for (from, to, weight) in [(old.from, node, 1.0), (node, old.to, old.weight)] {
            self.connections.push(ConnectionGene {
                innovation: innovations.connection(from, to),
                from,
                to,
                weight,
                enabled: true,
            });
        }
        self.sort();
        true
    }

    /// Add a random feed-forward connection that does not exist yet.
    pub fn add_connection<R: Rng>(
        &mut self,
        rng: &mut R,
        innovations: &mut InnovationCounter,
    ) -> bool {
        let existing: HashSet<(usize, usize)> =
            self.connections.iter().map(|c| (c.from, c.to)).collect();
        let mut options = vec![];
        for src in self.nodes.values().filter(|n| n.role != NodeRole::Output) {
            for dst in self
                .nodes
                .values()
                .filter(|n| matches!(n.role, NodeRole::Hidden | NodeRole::Output))
            {
                if !existing.contains(&(src.id, dst.id)) && !self.creates_cycle(src.id, dst.id) {
                    options.push((src.id, dst.id));
                }
            }
        }
        let Some(&(from, to)) = options.choose(rng) else {
            return false;
        };
        self.connections.push(ConnectionGene {
            innovation: innovations.connection(from, to),
            from,
            to,
            weight: rng.gen_range(-1.0..=1.0),
            enabled: true,
        });
        self.sort();
        true
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in self.nodes.values() {
            out.push_str(&format!(
                "node {} {} {}\n",
                n.id,
                n.role,
                n.activation.name()
            ));
        }
        for c in &self.connections {
            out.push_str(&format!(
                "conn {} {} {} {:.16e} {}\n",
                c.innovation, c.from, c.to, c.weight, c.enabled
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Genome, GenomeError> {
        let mut hidden = vec![];
        let mut conns = vec![];
        for (i, line) in text.lines().enumerate() {
            let err = |m: String| GenomeError::Parse {
                line: i + 1,
                message: m,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                [] => {}
                ["node", id, role, act] => {
                    let id: usize = id.parse().map_err(|_| err(format!("bad node id `{id}`")))?;
                    let role: NodeRole = role.parse().map_err(err)?;
                    let activation: Activation = act.parse().map_err(err)?;
                    if role == NodeRole::Hidden {
                        if id < FIRST_HIDDEN {
                            return Err(err(format!("hidden node id {id} collides with I/O ids")));
                        }
                        hidden.push(NodeGene {
                            id,
                            role,
                            activation,
                        });
                    }
                }
                ["conn", innov, from, to, w, en] => {
                    let p = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|_| err(format!("bad integer `{s}`")))
                    };
                    conns.push(ConnectionGene {
                        innovation: p(innov)?,
                        from: p(from)?,
                        to: p(to)?,
                        weight: w.parse().map_err(|_| err(format!("bad weight `{w}`")))?,
                        enabled: en.parse().map_err(|_| err(format!("bad flag `{en}`")))?,
                    });
                }
                _ => return Err(err(format!("unrecognised line `{line}`"))),
            }
        }
        let g = Genome::from_genes(&hidden, conns);
        for c in &g.connections {
            if !g.nodes.contains_key(&c.from) || !g.nodes.contains_key(&c.to) {
                return Err(GenomeError::Parse {
                    line: 0,
                    message: format!("connection {} references an unknown node", c.innovation),
                });
            }
        }
        g.topological_order()?;
        Ok(g)
    }
}

/// Perturbation and structural mutation rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationRates {
    pub mutation_prob: f64,
    pub add_connection: f64,
    pub add_node: f64,
    pub weight_sigma: f64,
    pub weight_reset: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        MutationRates {
            mutation_prob: 0.8,
            add_connection: 0.05,
            add_node: 0.03,
            weight_sigma: 0.5,
            weight_reset: 0.1,
        }
    }
}

/// With probability `mutation_prob`, apply exactly one of: add a connection,
/// add a node, or perturb every weight.
pub fn mutate<R: Rng>(
    genome: &Genome,
    rates: &MutationRates,
    rng: &mut R,
    innovations: &mut InnovationCounter,
) -> Genome {
    let mut g = genome.clone();
    if rng.gen::<f64>() >= rates.mutation_prob {
        return g;
    }
    let r: f64 = rng.gen();
    if r < rates.add_connection {
        g.add_connection(rng, innovations);
    } else if r < rates.add_connection + rates.add_node {
        g.add_node(rng, innovations);
    } else {
        let noise = Normal::new(0.0, rates.weight_sigma).expect("sigma is finite and non-negative");
        for c in &mut g.connections {
            if rng.gen::<f64>() < rates.weight_reset {
                c.weight = rng.gen_range(-2.0..=2.0);
            } else {
                c.weight += noise.sample(rng);
            }
        }
    }
    g
}

/// NEAT crossover aligned on innovation numbers. Matching genes take either
/// parent's weight; disjoint and excess genes come from the fitter parent
/// (`a` on ties).
pub fn crossover<R: Rng>(a: &Genome, b: &Genome, fa: f64, fb: f64, rng: &mut R) -> Genome {
    let (fit, other) = if fb > fa { (b, a) } else { (a, b) };
    let other_genes: HashMap<usize, &ConnectionGene> = other
        .connections
        .iter()
        .map(|c| (c.innovation, c))
        .collect();
    let mut nodes = fit.nodes.clone();
    let connections = fit
        .connections
        .iter()
        .map(|c| match other_genes.get(&c.innovation) {
            Some(o) => {
                let weight = if rng.gen::<bool>() {
                    c.weight
                } else {
                    o.weight
                };
                ConnectionGene {
                    weight,
                    enabled: c.enabled || o.enabled,
                    ..*c
                }
            }
            None => *c,
        })
        .collect::<Vec<_>>();
    for c in &connections {
        for id in [c.from, c.to] {
            if let (false, Some(n)) = (nodes.contains_key(&id), other.nodes.get(&id)) {
                nodes.insert(id, *n);
            }
        }
    }
    let mut child = Genome { nodes, connections };
    child.sort();
    // Re-enabling genes from the other parent can close a loop in rare cases.
    if child.topological_order().is_err() {
        return fit.clone();
    }
    child
}
