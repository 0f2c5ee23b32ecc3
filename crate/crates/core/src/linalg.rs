//! Spectral norm estimation by power iteration.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::par::{self, ExecPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("spectral norm of a zero (or empty) operator is undefined")]
    ZeroOperator,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// A real linear map `ℝⁿ → ℝᵐ` that can also apply its transpose.
pub trait LinearMap {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &Array1<f64>) -> Array1<f64>;
    fn apply_transpose(&self, y: &Array1<f64>) -> Array1<f64>;
}

impl LinearMap for Array2<f64> {
    fn input_dim(&self) -> usize {
        self.ncols()
    }

    fn output_dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &Array1<f64>) -> Array1<f64> {
        par::gemv(ExecPolicy::default(), self.view(), x.view())
    }

    fn apply_transpose(&self, y: &Array1<f64>) -> Array1<f64> {
        par::gemv_t(self.view(), y.view())
    }
}

/// Seed of the power-iteration start vector.
pub const POWER_SEED: u64 = 0x5_eed0_fb0b;
const MAX_POWER_ITERS: usize = 100_000;

/// Largest singular value `‖M‖₂`, via power iteration on `MᵀM` from a fixed
/// seeded start vector. Stops once the Rayleigh quotient changes by less
/// than `tol` relative between two sweeps.
pub fn spectral_norm<M: LinearMap + ?Sized>(mat: &M, tol: f64) -> Result<f64, LinalgError> {
    if !(tol > 0.0) {
        return Err(LinalgError::InvalidTolerance(tol));
    }
    let n = mat.input_dim();
    if n == 0 || mat.output_dim() == 0 {
        return Err(LinalgError::ZeroOperator);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Array1<f64> = Array1::from_shape_fn(n, |_| StandardNormal.sample(&mut rng));
    let norm = v.dot(&v).sqrt();
    v /= norm;

    let mut lambda = 0.0f64;
    for _ in 0..MAX_POWER_ITERS {
        let w = mat.apply_transpose(&mat.apply(&v));
        // Rayleigh quotient vᵀMᵀMv with ‖v‖ = 1
        let next = v.dot(&w);
        let w_norm = w.dot(&w).sqrt();
        if w_norm == 0.0 {
            return Err(LinalgError::ZeroOperator);
        }
        v = w / w_norm;
        let converged = lambda > 0.0 && (next - lambda).abs() <= tol * next;
        lambda = next;
        if converged {
            break;
        }
    }
    if lambda <= 0.0 {
        return Err(LinalgError::ZeroOperator);
    }
    Ok(lambda.sqrt())
}
