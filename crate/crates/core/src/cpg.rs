//! Central pattern generator networks built from a body plan.
//!
//! Every active hinge hosts a two-neuron differential oscillator. The
//! x-neuron of each oscillator drives a tanh output neuron with a fixed unit
//! weight; neighbouring oscillators are coupled x-to-x with antisymmetric
//! weights. The free parameters of a network are one intra-oscillator weight
//! per joint followed by one coupling weight per edge.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::morphology::{joint_adjacency, layout, MorphologyError, MorphologyTree};

/// Magnitude cap on neuron state; tanh is saturated long before this.
pub const STATE_CLAMP: f64 = 1e6;

pub const DEFAULT_INITIAL_STATE: (f64, f64) = (
    -std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
);

pub const DEFAULT_INTRA_WEIGHT: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum CpgError {
    #[error(transparent)]
    Morphology(#[from] MorphologyError),
    #[error("weight vector has {got} entries, network expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("oscillator {index} reached a non-finite state")]
    NonFiniteState { index: usize },
    #[error("malformed weight file: {0}")]
    WeightFormat(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Oscillator {
    pub joint_id: String,
    /// Grid cell of the hinge relative to the core.
    pub cell: (i32, i32),
    /// Grid position scaled into [-1, 1].
    pub coord: (f64, f64),
    pub x: f64,
    pub y: f64,
}

/// Six-dimensional label of one connection weight: source neuron then
/// target neuron, each as (a, b, c) with c = 1 for x, -1 for y, 0 for out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightCoordinate {
    pub source: [f64; 3],
    pub target: [f64; 3],
}

impl WeightCoordinate {
    pub fn as_array(&self) -> [f64; 6] {
        let [a1, b1, c1] = self.source;
        let [a2, b2, c2] = self.target;
        [a1, b1, c1, a2, b2, c2]
    }

    pub fn label(&self) -> String {
        self.as_array()
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(":")
    }

    pub fn parse_label(label: &str) -> Option<WeightCoordinate> {
        let vals: Vec<f64> = label
            .split(':')
            .map(|p| p.trim().parse().ok())
            .collect::<Option<_>>()?;
        let [a1, b1, c1, a2, b2, c2] = vals.as_slice() else {
            return None;
        };
        Some(WeightCoordinate {
            source: [*a1, *b1, *c1],
            target: [*a2, *b2, *c2],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn zeros(len: usize) -> Self {
        WeightVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of entries outside `[lo, hi]`.
    pub fn out_of_bounds(&self, lo: f64, hi: f64) -> usize {
        self.0.iter().filter(|v| !(lo..=hi).contains(*v)).count()
    }

    /// Two-line CSV: coordinate labels, then values with 17 significant digits.
    pub fn to_csv(&self, coords: &[WeightCoordinate]) -> String {
        let header: Vec<String> = coords.iter().map(WeightCoordinate::label).collect();
        let values: Vec<String> = self.0.iter().map(|v| format_sig17(*v)).collect();
        format!("{}\n{}\n", header.join(","), values.join(","))
    }

    /// Parse the CSV written by [`WeightVector::to_csv`]. Returns the
    /// coordinates from the header alongside the values.
    pub fn from_csv(text: &str) -> Result<(Vec<WeightCoordinate>, WeightVector), CpgError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().unwrap_or("");
        let data = lines.next().unwrap_or("");
        let split = |l: &str| -> Vec<String> {
            if l.trim().is_empty() {
                vec![]
            } else {
                l.split(',').map(|s| s.trim().to_string()).collect()
            }
        };
        let coords = split(header)
            .iter()
            .map(|l| {
                WeightCoordinate::parse_label(l)
                    .ok_or_else(|| CpgError::WeightFormat(format!("bad coordinate label `{l}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let values = split(data)
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CpgError::WeightFormat(format!("bad value `{v}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if coords.len() != values.len() {
            return Err(CpgError::WeightFormat(format!(
                "{} labels but {} values",
                coords.len(),
                values.len()
            )));
        }
        Ok((coords, WeightVector(values)))
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format_sig17(*v)).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

impl FromStr for WeightVector {
    type Err = CpgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WeightVector::from_csv(s).map(|(_, w)| w)
    }
}

/// `v` printed with 17 significant digits, enough to round-trip any f64.
pub fn format_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpgNetwork {
    oscillators: Vec<Oscillator>,
    edges: Vec<(usize, usize)>,
    intra: Vec<f64>,
    inter: Vec<f64>,
    initial_state: (f64, f64),
}

impl CpgNetwork {
    /// Assemble a network from explicit parts. Edge `(i, j)` carries the
    /// weight from oscillator `i` to oscillator `j`; the reverse direction
    /// uses its negation.
    pub fn from_parts(mut oscillators: Vec<Oscillator>, edges: Vec<(usize, usize)>) -> Self {
        let n = oscillators.len();
        assert!(
            edges.iter().all(|&(i, j)| i < n && j < n && i != j),
            "edge endpoints must be distinct oscillators"
        );
        let initial_state = DEFAULT_INITIAL_STATE;
        for o in &mut oscillators {
            (o.x, o.y) = initial_state;
        }
        CpgNetwork {
            intra: vec![DEFAULT_INTRA_WEIGHT; n],
            inter: vec![0.0; edges.len()],
            oscillators,
            edges,
            initial_state,
        }
    }

    pub fn with_initial_state(mut self, x0: f64, y0: f64) -> Self {
        self.initial_state = (x0, y0);
        self.reset();
        self
    }

    pub fn oscillators(&self) -> &[Oscillator] {
        &self.oscillators
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn initial_state(&self) -> (f64, f64) {
        self.initial_state
    }

    /// J + E.
    pub fn parameter_count(&self) -> usize {
        self.oscillators.len() + self.edges.len()
    }

    /// Current weights in canonical order.
    pub fn weights(&self) -> WeightVector {
        WeightVector(self.intra.iter().chain(&self.inter).copied().collect())
    }

    pub fn set_weights(&mut self, weights: &WeightVector) -> Result<(), CpgError> {
        if weights.len() != self.parameter_count() {
            return Err(CpgError::LengthMismatch {
                expected: self.parameter_count(),
                got: weights.len(),
            });
        }
        let (intra, inter) = weights.as_slice().split_at(self.oscillators.len());
        self.intra.copy_from_slice(intra);
        self.inter.copy_from_slice(inter);
        Ok(())
    }

    pub fn reset(&mut self) {
        let (x0, y0) = self.initial_state;
        for o in &mut self.oscillators {
            o.x = x0;
            o.y = y0;
        }
    }

    /// Current outputs without advancing time.
    pub fn outputs(&self) -> Vec<f64> {
        self.oscillators.iter().map(|o| o.x.tanh()).collect()
    }

    /// Labels of the canonical weight vector entries.
    pub fn weight_coordinates(&self) -> Vec<WeightCoordinate> {
        let intra = self.oscillators.iter().map(|o| {
            let (a, b) = o.coord;
            WeightCoordinate {
                source: [a, b, 1.0],
                target: [a, b, -1.0],
            }
        });
        let inter = self.edges.iter().map(|&(i, j)| {
            let (ai, bi) = self.oscillators[i].coord;
            let (aj, bj) = self.oscillators[j].coord;
            WeightCoordinate {
                source: [ai, bi, 1.0],
                target: [aj, bj, 1.0],
            }
        });
        intra.chain(inter).collect()
    }

    /// Advance every oscillator one tick from the previous snapshot and
    /// return the new outputs.
    pub fn step(&mut self) -> Result<Vec<f64>, CpgError> {
        let mut dx: Vec<f64> = self
            .oscillators
            .iter()
            .zip(&self.intra)
            .map(|(o, w_xy)| -w_xy * o.y)
            .collect();
        for (&(i, j), &w_ij) in self.edges.iter().zip(&self.inter) {
            let (xi, xj) = (self.oscillators[i].x, self.oscillators[j].x);
            dx[j] += xi * w_ij;
            dx[i] -= xj * w_ij;
        }
        let mut out = Vec::with_capacity(self.oscillators.len());
        for (k, ((o, w_xy), dx)) in self
            .oscillators
            .iter_mut()
            .zip(&self.intra)
            .zip(dx)
            .enumerate()
        {
            let dy = w_xy * o.x;
            o.x = (o.x + dx).clamp(-STATE_CLAMP, STATE_CLAMP);
            o.y = (o.y + dy).clamp(-STATE_CLAMP, STATE_CLAMP);
            if !o.x.is_finite() || !o.y.is_finite() {
                return Err(CpgError::NonFiniteState { index: k });
            }
            out.push(o.x.tanh());
        }
        Ok(out)
    }

    /// Reset, load `weights` and step `ticks` times. Row `t` holds the
    /// outputs after tick `t + 1`.
    pub fn run(&mut self, weights: &WeightVector, ticks: usize) -> Result<Vec<Vec<f64>>, CpgError> {
        self.set_weights(weights)?;
        self.reset();
        (0..ticks).map(|_| self.step()).collect()
    }
}

/// Compile a body into its controller network. Oscillators are ordered by
/// joint id, edges follow [`joint_adjacency`].
pub fn build_network(tree: &MorphologyTree) -> Result<CpgNetwork, CpgError> {
    let grid = layout(tree)?;
    let extent = grid.extent();
    let scale = if extent == 0 { 1.0 } else { extent as f64 };

    let mut ids: Vec<&str> = tree.joints().map(|m| m.id.as_str()).collect();
    ids.sort_unstable();
    let oscillators: Vec<Oscillator> = ids
        .iter()
        .map(|id| {
            let p = grid.get(id).expect("every module is placed");
            Oscillator {
                joint_id: id.to_string(),
                cell: (p.gx, p.gy),
                coord: (p.gx as f64 / scale, p.gy as f64 / scale),
                x: 0.0,
                y: 0.0,
            }
        })
        .collect();
    let position = |id: &str| ids.binary_search(&id).expect("adjacency lists joints only");
    let edges = joint_adjacency(tree)
        .iter()
        .map(|(a, b)| (position(a), position(b)))
        .collect();
    Ok(CpgNetwork::from_parts(oscillators, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn free_oscillator(coord: (f64, f64)) -> Oscillator {
        Oscillator {
            joint_id: "j".into(),
            cell: (1, 0),
            coord,
            x: 0.0,
            y: 0.0,
        }
    }

    #[test]
    fn single_uncoupled_step() {
        let mut net = CpgNetwork::from_parts(vec![free_oscillator((0.5, 0.0))], vec![]);
        let out = net.step().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(net.oscillators()[0].x, -h - 0.5 * h, epsilon = 1e-15);
        assert_relative_eq!(net.oscillators()[0].y, h - 0.5 * h, epsilon = 1e-15);
        assert_relative_eq!(net.oscillators()[0].x, -1.0606601717798212, epsilon = 1e-12);
        assert_relative_eq!(net.oscillators()[0].y, 0.35355339059327373, epsilon = 1e-12);
        // 2 / (1 + e^{-2x}) - 1 at x = -1.0606601717798212
        assert_relative_eq!(out[0], -0.7859163970696592, epsilon = 1e-12);
    }

    #[test]
    fn zero_weights_freeze_state() {
        let mut net = CpgNetwork::from_parts(vec![free_oscillator((0.0, 0.0))], vec![]);
        let series = net.run(&WeightVector::zeros(1), 5).unwrap();
        for row in series {
            assert_relative_eq!(row[0], -0.60886, epsilon = 1e-5);
        }
    }

    #[test]
    fn coupling_is_antisymmetric() {
        let oscs = vec![free_oscillator((0.5, 0.0)), free_oscillator((1.0, 0.0))];
        let mut net = CpgNetwork::from_parts(oscs, vec![(0, 1)]);
        net.set_weights(&WeightVector(vec![0.0, 0.0, 0.3])).unwrap();
        net.oscillators[0].x = 2.0;
        net.oscillators[1].x = -1.0;
        net.step().unwrap();
        // x2 += x1 * 0.3, x1 += x2 * (-0.3)
        assert_relative_eq!(net.oscillators[1].x, -1.0 + 2.0 * 0.3, epsilon = 1e-15);
        assert_relative_eq!(net.oscillators[0].x, 2.0 + (-1.0) * -0.3, epsilon = 1e-15);
    }

    #[test]
    fn swapped_orientation_is_identical() {
        let oscs = vec![free_oscillator((0.5, 0.0)), free_oscillator((1.0, 0.0))];
        let mut a = CpgNetwork::from_parts(oscs.clone(), vec![(0, 1)]);
        let mut b = CpgNetwork::from_parts(oscs, vec![(1, 0)]);
        let ra = a.run(&WeightVector(vec![0.4, -0.7, 0.3]), 200).unwrap();
        let rb = b.run(&WeightVector(vec![0.4, -0.7, -0.3]), 200).unwrap();
        for (x, y) in ra.iter().flatten().zip(rb.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn labels() {
        let oscs = vec![free_oscillator((0.5, 0.0)), free_oscillator((1.0, 0.0))];
        let net = CpgNetwork::from_parts(oscs, vec![(0, 1)]);
        let c = net.weight_coordinates();
        assert_eq!(c[0].as_array(), [0.5, 0.0, 1.0, 0.5, 0.0, -1.0]);
        assert_eq!(c[2].as_array(), [0.5, 0.0, 1.0, 1.0, 0.0, 1.0]);
        assert!(CpgNetwork::from_parts(vec![], vec![])
            .weight_coordinates()
            .is_empty());
    }

    #[test]
    fn run_checks_length_and_zero_ticks() {
        let mut net = CpgNetwork::from_parts(vec![free_oscillator((0.0, 0.0))], vec![]);
        assert_eq!(
            net.run(&WeightVector::zeros(3), 1),
            Err(CpgError::LengthMismatch {
                expected: 1,
                got: 3
            })
        );
        assert!(net.run(&WeightVector::zeros(1), 0).unwrap().is_empty());
    }

    #[test]
    fn nan_weights_flag_non_finite_state() {
        let mut net = CpgNetwork::from_parts(vec![free_oscillator((0.0, 0.0))], vec![]);
        let err = net.run(&WeightVector(vec![f64::NAN]), 1).unwrap_err();
        assert_eq!(err, CpgError::NonFiniteState { index: 0 });
    }

    #[test]
    fn huge_weights_stay_finite() {
        let mut net = CpgNetwork::from_parts(vec![free_oscillator((0.0, 0.0))], vec![]);
        let series = net.run(&WeightVector(vec![1e5]), 100).unwrap();
        assert!(series.iter().flatten().all(|o| (-1.0..=1.0).contains(o)));
        assert!(net.oscillators()[0].x.abs() <= STATE_CLAMP);
    }

    #[test]
    fn weight_csv_roundtrip() {
        let oscs = vec![free_oscillator((0.5, 0.0)), free_oscillator((1.0, -0.25))];
        let net = CpgNetwork::from_parts(oscs, vec![(0, 1)]);
        let w = WeightVector(vec![0.1, -1.0 / 3.0, std::f64::consts::PI]);
        let text = w.to_csv(&net.weight_coordinates());
        assert!(text.starts_with("0.5:0:1:0.5:0:-1,"));
        let (coords, back) = WeightVector::from_csv(&text).unwrap();
        assert_eq!(coords, net.weight_coordinates());
        assert_eq!(back, w);
    }

    #[test]
    fn empty_weight_csv() {
        let text = WeightVector::zeros(0).to_csv(&[]);
        let (coords, w) = WeightVector::from_csv(&text).unwrap();
        assert!(coords.is_empty() && w.is_empty());
    }
}
