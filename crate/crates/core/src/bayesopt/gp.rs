use nalgebra::DMatrix;
use thiserror::Error;

/// Largest diagonal jitter tried before a Gram matrix is declared singular.
pub const MAX_JITTER: f64 = 1e-2;

/// Points closer than this are treated as the same input.
pub const DUPLICATE_RADIUS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GpError {
    #[error("Gram matrix not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },
    #[error("no training data")]
    Empty,
    #[error("inputs have inconsistent dimensions")]
    Shape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub variance: f64,
    pub length_scale: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            variance: 1.0,
            length_scale: 0.2,
        }
    }
}

/// Matérn covariance with smoothness 5/2 at distance `r`.
pub fn matern52(r: f64, params: KernelParams) -> f64 {
    let s = 5f64.sqrt() * r / params.length_scale;
    params.variance * (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gram matrix of `points` under the Matérn 5/2 kernel, without jitter.
pub fn gram_matrix(points: &[Vec<f64>], kernel: KernelParams) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        matern52(sq_dist(&points[i], &points[j]).sqrt(), kernel)
    })
}

/// Noise-free GP posterior on the unit cube with a constant mean equal to
/// the sample mean of the targets.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelParams,
    dim: usize,
    /// Row-major n × d.
    inputs: Vec<f64>,
    /// Mean-centred.
    targets: Vec<f64>,
    target_mean: f64,
    chol: DMatrix<f64>,
    /// (K + jitter I)^-1 · targets
    alpha: Vec<f64>,
    jitter: f64,
}

/// Drop all but the last occurrence of inputs within [`DUPLICATE_RADIUS`].
pub fn deduplicate(inputs: &[Vec<f64>], targets: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let r2 = DUPLICATE_RADIUS * DUPLICATE_RADIUS;
    let mut keep: Vec<usize> = vec![];
    for i in (0..inputs.len()).rev() {
        if keep.iter().all(|&k| sq_dist(&inputs[i], &inputs[k]) > r2) {
            keep.push(i);
        }
    }
    keep.reverse();
    (
        keep.iter().map(|&i| inputs[i].clone()).collect(),
        keep.iter().map(|&i| targets[i]).collect(),
    )
}

pub fn gp_fit(
    inputs: &[Vec<f64>],
    targets: &[f64],
    kernel: KernelParams,
    jitter: f64,
) -> Result<GpModel, GpError> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(GpError::Empty);
    }
    let dim = inputs[0].len();
    if inputs.iter().any(|p| p.len() != dim) {
        return Err(GpError::Shape);
    }
    let (inputs, targets) = deduplicate(inputs, targets);
    let n = inputs.len();
    let target_mean = targets.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = targets.iter().map(|t| t - target_mean).collect();

    let gram = gram_matrix(&inputs, kernel);
    let mut j = jitter;
    let chol = loop {
        let mut k = gram.clone();
        for i in 0..n {
            k[(i, i)] += j;
        }
        if let Some(c) = k.cholesky() {
            break c.unpack();
        }
        j = if j > 0.0 { j * 10.0 } else { 1e-12 };
        if j > MAX_JITTER {
            return Err(GpError::NotPositiveDefinite { jitter: j / 10.0 });
        }
    };

    let mut alpha = centred.clone();
    forward_substitute(&chol, &mut alpha);
    backward_substitute(&chol, &mut alpha);

    Ok(GpModel {
        kernel,
        dim,
        inputs: inputs.into_iter().flatten().collect(),
        targets: centred,
        target_mean,
        chol,
        alpha,
        jitter: j,
    })
}

/// Solve L v = b in place, L lower-triangular (column-major storage).
fn forward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for j in 0..n {
        let col = l.column(j);
        b[j] /= col[j];
        let bj = b[j];
        for i in j + 1..n {
            b[i] -= col[i] * bj;
        }
    }
}

/// Solve Lᵀ v = b in place.
fn backward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for j in (0..n).rev() {
        let col = l.column(j);
        let mut s = b[j];
        for i in j + 1..n {
            s -= col[i] * b[i];
        }
        b[j] = s / col[j];
    }
}

impl GpModel {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    /// Jitter actually added to the diagonal after escalation.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Posterior mean and variance at `q`.
    pub fn predict(&self, q: &[f64]) -> (f64, f64) {
        let mut scratch = Vec::with_capacity(self.len());
        self.predict_with(q, &mut scratch)
    }

    /// As [`GpModel::predict`], reusing `scratch` for the kernel vector.
    pub fn predict_with(&self, q: &[f64], scratch: &mut Vec<f64>) -> (f64, f64) {
        scratch.clear();
        scratch.extend(
            self.inputs
                .chunks_exact(self.dim.max(1))
                .take(self.len())
                .map(|x| matern52(sq_dist(x, q).sqrt(), self.kernel)),
        );
        if self.dim == 0 {
            scratch.resize(self.len(), self.kernel.variance);
        }
        let mu = self.target_mean
            + scratch
                .iter()
                .zip(&self.alpha)
                .map(|(k, a)| k * a)
                .sum::<f64>();
        forward_substitute(&self.chol, scratch);
        let explained: f64 = scratch.iter().map(|v| v * v).sum();
        (mu, (self.kernel.variance - explained).max(0.0))
    }
}

pub fn gp_predict(model: &GpModel, q: &[f64]) -> (f64, f64) {
    model.predict(q)
}
