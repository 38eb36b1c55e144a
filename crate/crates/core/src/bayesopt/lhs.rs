use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Latin hypercube design of `n` points in `[0, 1]^d`, one row per point.
///
/// Each column is a random permutation of the `n` equal-width strata with a
/// uniform offset inside each stratum.
pub fn lhs_sample(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lhs_sample_with(n, d, &mut rng)
}

pub fn lhs_sample_with<R: Rng>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for dim in 0..d {
        strata.shuffle(rng);
        for (row, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.gen();
            row[dim] = (s as f64 + u) / n as f64;
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strata_hits(points: &[Vec<f64>], dim: usize) -> Vec<usize> {
        let n = points.len();
        let mut hits = vec![0; n];
        for p in points {
            hits[((p[dim] * n as f64).floor() as usize).min(n - 1)] += 1;
        }
        hits
    }

    #[test]
    fn four_points_one_per_quarter() {
        let p = lhs_sample(4, 1, 11);
        assert_eq!(strata_hits(&p, 0), vec![1, 1, 1, 1]);
    }

    #[test]
    fn fifty_by_eighteen_is_stratified() {
        let p = lhs_sample(50, 18, 5);
        assert_eq!(p.len(), 50);
        for dim in 0..18 {
            assert!(strata_hits(&p, dim).iter().all(|&h| h == 1), "dim {dim}");
        }
        assert!(p.iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn seeded() {
        assert_eq!(lhs_sample(10, 3, 99), lhs_sample(10, 3, 99));
        assert_ne!(lhs_sample(10, 3, 99), lhs_sample(10, 3, 100));
    }
}
