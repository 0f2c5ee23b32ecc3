//! Seeded synthetic problems for diagnostics and tests.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::spectral_norm;
use crate::par::{self, ExecPolicy};
use crate::prox;
use crate::solver::Problem;

/// Safety margin applied to power-iteration Lipschitz estimates so that
/// `β = 1/L` stays inside `(0, 1/L_true]`.
pub const LIPSCHITZ_INFLATION: f64 = 1.0 + 1e-4;

/// `½‖Ax − c‖² + reg·‖x‖₁`.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    pub a: Array2<f64>,
    pub c: Array1<f64>,
    pub reg: f64,
    lipschitz: f64,
}

impl LassoProblem {
    pub fn new(a: Array2<f64>, c: Array1<f64>, reg: f64) -> Self {
        assert_eq!(a.nrows(), c.len(), "observation length must match rows");
        let sigma = spectral_norm(&a, 1e-12).expect("nonzero design matrix");
        Self { a, c, reg, lipschitz: sigma * sigma * LIPSCHITZ_INFLATION }
    }

    /// Standard Gaussian design, a dense ground truth uniform in `[-2, 2]` and
    /// observation noise `0.01·N(0, 1)`, all drawn from `seed`. With fewer rows
    /// than columns the solution support fills the row space, which keeps the
    /// problem in its sublinear regime for thousands of iterations.
    pub fn random(rows: usize, cols: usize, reg: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal));
        let truth = Array1::from_shape_fn(cols, |_| rng.gen_range(-2.0..2.0));
        let noise = Array1::from_shape_fn(rows, |_| 0.01 * rng.sample::<f64, _>(StandardNormal));
        let c = a.dot(&truth) + noise;
        Self::new(a, c, reg)
    }

    fn residual(&self, x: &Array1<f64>) -> Array1<f64> {
        par::gemv(ExecPolicy::Sequential, self.a.view(), x.view()) - &self.c
    }
}

impl Problem for LassoProblem {
    fn dimension(&self) -> usize {
        self.a.ncols()
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn smooth_value(&self, x: &Array1<f64>) -> f64 {
        let r = self.residual(x);
        0.5 * r.dot(&r)
    }
    fn smooth_grad(&self, x: &Array1<f64>) -> Array1<f64> {
        par::gemv_t(self.a.view(), self.residual(x).view())
    }
    fn nonsmooth_value(&self, x: &Array1<f64>) -> f64 {
        self.reg * x.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn prox(&self, mut v: Array1<f64>, scale: f64) -> Array1<f64> {
        prox::prox_l1_inplace(v.view_mut(), scale * self.reg);
        v
    }
}

/// Separable `½ Σ dᵢ(xᵢ − cᵢ)² + reg·‖x‖₁` with a closed-form minimizer
/// `xᵢ* = soft(cᵢ, reg/dᵢ)`.
#[derive(Debug, Clone)]
pub struct SeparableQuadratic {
    pub curvature: Array1<f64>,
    pub centre: Array1<f64>,
    pub reg: f64,
}

impl SeparableQuadratic {
    /// Curvatures log-spaced over `[1e-3, 1]`, centres uniform in `[-3, 3]`.
    pub fn random(dim: usize, reg: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let curvature = Array1::from_shape_fn(dim, |i| {
            let s = if dim > 1 { i as f64 / (dim - 1) as f64 } else { 1.0 };
            10f64.powf(-3.0 * (1.0 - s))
        });
        let centre = Array1::from_shape_fn(dim, |_| rng.gen_range(-3.0..3.0));
        Self { curvature, centre, reg }
    }

    pub fn minimizer(&self) -> Array1<f64> {
        ndarray::Zip::from(&self.centre)
            .and(&self.curvature)
            .map_collect(|&c, &d| prox::shrink(c, self.reg / d))
    }

    pub fn optimal_value(&self) -> f64 {
        self.objective(&self.minimizer())
    }
}

impl Problem for SeparableQuadratic {
    fn dimension(&self) -> usize {
        self.centre.len()
    }
    fn lipschitz(&self) -> f64 {
        self.curvature.iter().cloned().fold(0.0, f64::max)
    }
    fn smooth_value(&self, x: &Array1<f64>) -> f64 {
        0.5 * ndarray::Zip::from(x)
            .and(&self.centre)
            .and(&self.curvature)
            .fold(0.0, |acc, &x, &c, &d| acc + d * (x - c) * (x - c))
    }
    fn smooth_grad(&self, x: &Array1<f64>) -> Array1<f64> {
        ndarray::Zip::from(x)
            .and(&self.centre)
            .and(&self.curvature)
            .map_collect(|&x, &c, &d| d * (x - c))
    }
    fn nonsmooth_value(&self, x: &Array1<f64>) -> f64 {
        self.reg * x.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn prox(&self, mut v: Array1<f64>, scale: f64) -> Array1<f64> {
        prox::prox_l1_inplace(v.view_mut(), scale * self.reg);
        v
    }
}
