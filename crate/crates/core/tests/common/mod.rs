#![allow(dead_code)]

use loco::cpg::Oscillator;
use loco::{build_network, parse_morphology, CpgNetwork};

pub const SPIDER9: &str = include_str!("../../../../fixtures/spider9.morph");

pub fn spider9() -> CpgNetwork {
    build_network(&parse_morphology(SPIDER9).unwrap()).unwrap()
}

/// Uncoupled network with `d` free parameters, for synthetic objectives.
pub fn free_net(d: usize) -> CpgNetwork {
    let oscillators = (0..d)
        .map(|k| Oscillator {
            joint_id: format!("J{k}"),
            cell: (k as i32 + 1, 0),
            coord: ((k as f64 + 1.0) / d as f64, 0.0),
            x: 0.0,
            y: 0.0,
        })
        .collect();
    CpgNetwork::from_parts(oscillators, vec![])
}

/// Concave bowl peaking at 0 when every weight equals `centre`.
pub fn bowl(centre: f64) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
    move |w: &[f64]| -w.iter().map(|v| (v - centre).powi(2)).sum::<f64>()
}

/// Count of pairs where `a` beats `b`.
pub fn wins(a: &[f64], b: &[f64]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x > y).count()
}

/// One-sided binomial tail P(X >= k) for X ~ Bin(n, 1/2).
pub fn sign_test_p(k: usize, n: usize) -> f64 {
    let choose = |n: usize, r: usize| -> f64 {
        (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    (k..=n).map(|r| choose(n, r)).sum::<f64>() / 2f64.powi(n as i32)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
