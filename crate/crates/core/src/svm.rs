//! Squared-hinge l1-regularized kernel SVM as a composite problem.
//!
//! With training pairs `(xᵢ, yᵢ)`, Gaussian kernel matrix `K`, `K̃ = [K 1]`,
//! `Y = diag(y)` and `B = YK̃`, the model over `w = [α; b] ∈ ℝ^{m+1}` is
//!
//! ```text
//! min_w  Σᵢ h̃((Bw)ᵢ) + λ‖Ĩw‖₁,      h̃(t) = (1 − t)² for t < 1, else 0,
//! ```
//!
//! where `Ĩ` drops the bias. `∇f(w) = Bᵀ∇h̃(Bw)` is `2‖B‖₂²`-Lipschitz.
//! `B` is never materialized: `Bw = y ∘ (Kα + b)` and, `K` being symmetric,
//! `Bᵀu = [K(y ∘ u); Σ yᵢuᵢ]`.

use ndarray::{s, Array1, Array2, ArrayView1};
use thiserror::Error;

use crate::dataio::{Label, SparseDataset};
use crate::linalg::{spectral_norm, LinalgError, LinearMap};
use crate::par::{self, ExecPolicy};
use crate::prox;
use crate::solver::{AccuracyMonitor, Problem};
use crate::synthetic::LIPSCHITZ_INFLATION;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SvmError {
    #[error("need at least two training samples, got {0}")]
    TooFewSamples(usize),
    #[error("kernel width gamma must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("regularization lambda must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("model has length {got}, expected {expected}")]
    ModelLength { expected: usize, got: usize },
    #[error("points use feature index {got}, model was trained on {expected} features")]
    FeatureMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(1 − t)²` for `t < 1`, else `0`.
#[inline]
pub fn squared_hinge(t: f64) -> f64 {
    if t < 1.0 {
        (1.0 - t) * (1.0 - t)
    } else {
        0.0
    }
}

/// `2(t − 1)` for `t < 1`, else `0`; 2-Lipschitz.
#[inline]
pub fn squared_hinge_deriv(t: f64) -> f64 {
    if t < 1.0 {
        2.0 * (t - 1.0)
    } else {
        0.0
    }
}

fn densify(ds: &SparseDataset, num_features: usize) -> Array2<f64> {
    let mut out = Array2::zeros((ds.len(), num_features));
    for (mut row, sample) in out.rows_mut().into_iter().zip(&ds.samples) {
        sample.densify_into(row.as_slice_mut().expect("standard layout"));
    }
    out
}

fn row_sq_norms(points: &Array2<f64>) -> Array1<f64> {
    points.rows().into_iter().map(|r| par::dot(r, r)).collect()
}

/// `exp(−γ‖a − b‖²)` for every pair of rows, with squared distances from the
/// norm expansion clamped at zero.
fn gaussian_cross_kernel(
    policy: ExecPolicy,
    gamma: f64,
    left: &Array2<f64>,
    left_norms: &Array1<f64>,
    right: &Array2<f64>,
    right_norms: &Array1<f64>,
) -> Array2<f64> {
    let mut out = Array2::zeros((left.nrows(), right.nrows()));
    par::fill_rows(policy, &mut out, |i, mut row| {
        let xi = left.row(i);
        for (j, k) in row.iter_mut().enumerate() {
            let d2 = (left_norms[i] + right_norms[j] - 2.0 * par::dot(xi, right.row(j))).max(0.0);
            *k = (-gamma * d2).exp();
        }
    });
    out
}

/// Gaussian kernel matrix of the rows of `points`; exactly symmetric with a
/// unit diagonal.
pub fn gaussian_kernel_matrix(policy: ExecPolicy, gamma: f64, points: &Array2<f64>) -> Array2<f64> {
    let norms = row_sq_norms(points);
    let mut k = gaussian_cross_kernel(policy, gamma, points, &norms, points, &norms);
    k.diag_mut().fill(1.0);
    k
}

/// The assembled squared-hinge l1-SVM.
#[derive(Debug, Clone)]
pub struct SvmProblem {
    pub gamma: f64,
    pub lambda: f64,
    pub num_features: usize,
    /// `K`, `m × m`.
    pub kernel: Array2<f64>,
    /// Diagonal of `Y` as `±1`.
    pub labels: Array1<f64>,
    /// Dense training points, kept for prediction.
    points: Array2<f64>,
    point_norms: Array1<f64>,
    /// `‖B‖₂` from power iteration.
    pub design_norm: f64,
    lipschitz: f64,
    policy: ExecPolicy,
}

/// `B` as a [`LinearMap`] without forming it.
struct Design<'a> {
    svm: &'a SvmProblem,
}

impl LinearMap for Design<'_> {
    fn input_dim(&self) -> usize {
        self.svm.m() + 1
    }
    fn output_dim(&self) -> usize {
        self.svm.m()
    }
    fn apply(&self, x: &Array1<f64>) -> Array1<f64> {
        self.svm.apply_design(x)
    }
    fn apply_transpose(&self, y: &Array1<f64>) -> Array1<f64> {
        self.svm.apply_design_transpose(y)
    }
}

/// Relative tolerance of the `‖B‖₂` power iteration.
pub const DESIGN_NORM_TOL: f64 = 1e-6;

impl SvmProblem {
    /// Builds `K`, `B` and `L = 2‖B‖₂²·(1 + 1e-4)` from the training set.
    pub fn build(train: &SparseDataset, gamma: f64, lambda: f64) -> Result<Self, SvmError> {
        Self::build_with(train, gamma, lambda, ExecPolicy::default())
    }

    pub fn build_with(train: &SparseDataset, gamma: f64, lambda: f64, policy: ExecPolicy) -> Result<Self, SvmError> {
        if train.len() < 2 {
            return Err(SvmError::TooFewSamples(train.len()));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SvmError::InvalidGamma(gamma));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(SvmError::InvalidLambda(lambda));
        }
        let points = densify(train, train.num_features);
        let point_norms = row_sq_norms(&points);
        let kernel = gaussian_kernel_matrix(policy, gamma, &points);
        let labels: Array1<f64> = train.labels().map(Label::sign).collect();
        let mut svm = SvmProblem {
            gamma,
            lambda,
            num_features: train.num_features,
            kernel,
            labels,
            points,
            point_norms,
            design_norm: 0.0,
            lipschitz: 0.0,
            policy,
        };
        svm.design_norm = spectral_norm(&Design { svm: &svm }, DESIGN_NORM_TOL)?;
        svm.lipschitz = 2.0 * svm.design_norm * svm.design_norm * LIPSCHITZ_INFLATION;
        Ok(svm)
    }

    /// Training-set size.
    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn policy(&self) -> ExecPolicy {
        self.policy
    }

    /// `Kα + b·1`.
    pub fn decision_values(&self, w: &Array1<f64>) -> Array1<f64> {
        let m = self.m();
        let mut out = par::gemv(self.policy, self.kernel.view(), w.slice(s![..m]));
        out += w[m];
        out
    }

    /// `Bw = y ∘ (Kα + b)`.
    pub fn apply_design(&self, w: &Array1<f64>) -> Array1<f64> {
        self.decision_values(w) * &self.labels
    }

    /// `Bᵀu = [K(y ∘ u); Σ yᵢuᵢ]`.
    pub fn apply_design_transpose(&self, u: &Array1<f64>) -> Array1<f64> {
        let m = self.m();
        let yu = u * &self.labels;
        let mut out = Array1::zeros(m + 1);
        out.slice_mut(s![..m])
            .assign(&par::gemv(self.policy, self.kernel.view(), yu.view()));
        out[m] = yu.sum();
        out
    }

    /// Explicit `B = YK̃` (tests and small problems only).
    pub fn design_matrix(&self) -> Array2<f64> {
        let m = self.m();
        let mut b = Array2::ones((m, m + 1));
        b.slice_mut(s![.., ..m]).assign(&self.kernel);
        for (mut row, &y) in b.rows_mut().into_iter().zip(self.labels.iter()) {
            row *= y;
        }
        b
    }

    /// Kernel between `points` and the training points, `p × m`.
    pub fn cross_kernel(&self, points: &SparseDataset) -> Result<Array2<f64>, SvmError> {
        let used = points
            .samples
            .iter()
            .filter_map(|s| s.features.last().map(|&(i, _)| i as usize))
            .max()
            .unwrap_or(0)
            .max(points.num_features);
        if used > self.num_features {
            return Err(SvmError::FeatureMismatch { expected: self.num_features, got: used });
        }
        let dense = densify(points, self.num_features);
        let norms = row_sq_norms(&dense);
        Ok(gaussian_cross_kernel(self.policy, self.gamma, &dense, &norms, &self.points, &self.point_norms))
    }

    fn check_model(&self, w: &Array1<f64>) -> Result<(), SvmError> {
        if w.len() != self.m() + 1 {
            return Err(SvmError::ModelLength { expected: self.m() + 1, got: w.len() });
        }
        Ok(())
    }

    /// Labels `sign(Σⱼ αⱼK(xⱼ, x) + b)` with `sign(0) = +1`.
    pub fn predict(&self, w: &Array1<f64>, points: &SparseDataset) -> Result<Vec<Label>, SvmError> {
        self.check_model(w)?;
        let cross = self.cross_kernel(points)?;
        Ok(predict_with_kernel(self.policy, &cross, w))
    }
}

fn predict_with_kernel(policy: ExecPolicy, cross: &Array2<f64>, w: &Array1<f64>) -> Vec<Label> {
    let m = cross.ncols();
    par::gemv(policy, cross.view(), w.slice(s![..m]))
        .iter()
        .map(|&v| Label::from_sign(v + w[m]))
        .collect()
}

/// Fraction of matching labels; `0` for empty input.
pub fn accuracy(predicted: &[Label], actual: impl IntoIterator<Item = Label>) -> f64 {
    let mut total = 0usize;
    let mut correct = 0usize;
    for (p, a) in predicted.iter().zip(actual) {
        total += 1;
        correct += usize::from(*p == a);
    }
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

impl Problem for SvmProblem {
    fn dimension(&self) -> usize {
        self.m() + 1
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn smooth_value(&self, w: &Array1<f64>) -> f64 {
        self.apply_design(w).iter().map(|&t| squared_hinge(t)).sum()
    }

    fn smooth_grad(&self, w: &Array1<f64>) -> Array1<f64> {
        let u = self.apply_design(w).mapv(squared_hinge_deriv);
        self.apply_design_transpose(&u)
    }

    fn nonsmooth_value(&self, w: &Array1<f64>) -> f64 {
        let m = self.m();
        self.lambda * w.slice(s![..m]).iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, mut v: Array1<f64>, scale: f64) -> Array1<f64> {
        prox::prox_l1_bias_inplace(v.view_mut(), scale * self.lambda).expect("nonnegative scale, nonempty model");
        v
    }
}

/// Training and (optionally) test accuracy of an SVM iterate.
pub struct SvmAccuracy<'a> {
    svm: &'a SvmProblem,
    train_labels: Vec<Label>,
    test: Option<(Array2<f64>, Vec<Label>)>,
}

impl<'a> SvmAccuracy<'a> {
    pub fn new(svm: &'a SvmProblem, test: Option<&SparseDataset>) -> Result<Self, SvmError> {
        let test = match test {
            Some(ds) => Some((svm.cross_kernel(ds)?, ds.labels().collect())),
            None => None,
        };
        let train_labels = svm.labels.iter().map(|&y| Label::from_sign(y)).collect();
        Ok(Self { svm, train_labels, test })
    }

    pub fn train_accuracy(&self, w: &Array1<f64>) -> f64 {
        let pred: Vec<Label> = self.svm.decision_values(w).iter().map(|&v| Label::from_sign(v)).collect();
        accuracy(&pred, self.train_labels.iter().copied())
    }

    pub fn test_accuracy(&self, w: &Array1<f64>) -> Option<f64> {
        self.test.as_ref().map(|(cross, labels)| {
            let pred = predict_with_kernel(self.svm.policy, cross, w);
            accuracy(&pred, labels.iter().copied())
        })
    }
}

impl AccuracyMonitor for SvmAccuracy<'_> {
    fn accuracies(&self, x: &Array1<f64>) -> (Option<f64>, Option<f64>) {
        (Some(self.train_accuracy(x)), self.test_accuracy(x))
    }
}

/// `F(w)` evaluated term by term from the explicit `B` (independent of the
/// matrix-free path).
pub fn reference_objective(svm: &SvmProblem, w: ArrayView1<'_, f64>) -> f64 {
    let b = svm.design_matrix();
    let m = svm.m();
    let loss: f64 = b.rows().into_iter().map(|row| squared_hinge(row.dot(&w))).sum();
    loss + svm.lambda * w.slice(s![..m]).iter().map(|v| v.abs()).sum::<f64>()
}
