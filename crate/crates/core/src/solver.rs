//! Forward-backward splitting with optional momentum.
//!
//! For `F = f + g` with `f` smooth (`∇f` is `L`-Lipschitz) and `g` prox-friendly,
//! the forward-backward operator is `T = prox_{βg} ∘ (I − β∇f)` with
//! `β ∈ (0, 1/L]`, and the accelerated iteration reads
//!
//! ```text
//! y^k     = x^k + θ_k (x^k − x^{k−1})
//! x^{k+1} = T(y^k)
//! ```
//!
//! starting from two given points `x^0`, `x^1`. With `θ_k ≡ 0` this is plain FBA.

use std::io::Write;

use ndarray::Array1;
use serde::Serialize;
use thiserror::Error;

use crate::momentum::{MomentumSchedule, ScheduleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("step size must satisfy 0 < beta <= 1/L = {max}, got {beta}")]
    InvalidBeta { beta: f64, max: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at iteration {k}")]
    NonFinite { k: u64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// A composite objective `F = f + g`.
pub trait Problem: Sync {
    fn dimension(&self) -> usize;

    /// Lipschitz constant of `∇f`.
    fn lipschitz(&self) -> f64;

    fn smooth_value(&self, x: &Array1<f64>) -> f64;

    fn smooth_grad(&self, x: &Array1<f64>) -> Array1<f64>;

    fn nonsmooth_value(&self, x: &Array1<f64>) -> f64;

    /// `prox_{scale·g}(v)`.
    fn prox(&self, v: Array1<f64>, scale: f64) -> Array1<f64>;

    fn objective(&self, x: &Array1<f64>) -> f64 {
        self.smooth_value(x) + self.nonsmooth_value(x)
    }

    /// `T(y) = prox_{βg}(y − β∇f(y))`; override when the two halves share work.
    fn forward_backward(&self, beta: f64, y: &Array1<f64>) -> Array1<f64> {
        let mut v = self.smooth_grad(y);
        v *= -beta;
        v += y;
        self.prox(v, beta)
    }
}

type ValueFn = Box<dyn Fn(&Array1<f64>) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&Array1<f64>) -> Array1<f64> + Send + Sync>;
type ProxFn = Box<dyn Fn(Array1<f64>, f64) -> Array1<f64> + Send + Sync>;

/// A [`Problem`] assembled from closures.
pub struct FnProblem {
    dimension: usize,
    lipschitz: f64,
    smooth_value: ValueFn,
    smooth_grad: GradFn,
    nonsmooth_value: ValueFn,
    prox: ProxFn,
}

impl FnProblem {
    /// A smooth problem with `g = 0`.
    pub fn smooth(
        dimension: usize,
        lipschitz: f64,
        value: impl Fn(&Array1<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Array1<f64>) -> Array1<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            lipschitz,
            smooth_value: Box::new(value),
            smooth_grad: Box::new(grad),
            nonsmooth_value: Box::new(|_| 0.0),
            prox: Box::new(|v, _| v),
        }
    }

    pub fn with_nonsmooth(
        mut self,
        value: impl Fn(&Array1<f64>) -> f64 + Send + Sync + 'static,
        prox: impl Fn(Array1<f64>, f64) -> Array1<f64> + Send + Sync + 'static,
    ) -> Self {
        self.nonsmooth_value = Box::new(value);
        self.prox = Box::new(prox);
        self
    }
}

impl Problem for FnProblem {
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn smooth_value(&self, x: &Array1<f64>) -> f64 {
        (self.smooth_value)(x)
    }
    fn smooth_grad(&self, x: &Array1<f64>) -> Array1<f64> {
        (self.smooth_grad)(x)
    }
    fn nonsmooth_value(&self, x: &Array1<f64>) -> f64 {
        (self.nonsmooth_value)(x)
    }
    fn prox(&self, v: Array1<f64>, scale: f64) -> Array1<f64> {
        (self.prox)(v, scale)
    }
}

fn check_beta(p: &(impl Problem + ?Sized), beta: f64) -> Result<(), SolveError> {
    let max = 1.0 / p.lipschitz();
    // admit β = 1/L computed with one rounding
    if !(beta > 0.0 && beta.is_finite() && beta * p.lipschitz() <= 1.0 + 1e-12) {
        return Err(SolveError::InvalidBeta { beta, max });
    }
    Ok(())
}

fn check_dim(p: &(impl Problem + ?Sized), v: &Array1<f64>) -> Result<(), SolveError> {
    if v.len() != p.dimension() {
        return Err(SolveError::DimensionMismatch { expected: p.dimension(), got: v.len() });
    }
    Ok(())
}

/// One application of `T = prox_{βg} ∘ (I − β∇f)`.
pub fn fb_operator<P: Problem + ?Sized>(p: &P, beta: f64, y: &Array1<f64>) -> Result<Array1<f64>, SolveError> {
    check_beta(p, beta)?;
    check_dim(p, y)?;
    Ok(p.forward_backward(beta, y))
}

/// `‖T(x) − x‖`.
pub fn fixed_point_residual<P: Problem + ?Sized>(p: &P, beta: f64, x: &Array1<f64>) -> Result<f64, SolveError> {
    let tx = fb_operator(p, beta, x)?;
    Ok(norm(&(tx - x)))
}

#[inline]
pub(crate) fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub beta: f64,
    pub schedule: MomentumSchedule,
    /// Index of the last iterate `x^k` the run may reach.
    pub max_iters: u64,
    /// Stop once `‖x^{k+1} − x^k‖ ≤ tol·(1 + ‖x^k‖)`; zero disables the test.
    pub fixed_point_tol: f64,
    pub x0: Array1<f64>,
    pub x1: Array1<f64>,
    pub trace_every: u64,
}

impl SolveConfig {
    /// Zero initial points, no early stopping, every iteration traced.
    pub fn new(beta: f64, schedule: MomentumSchedule, max_iters: u64, dimension: usize) -> Self {
        Self {
            beta,
            schedule,
            max_iters,
            fixed_point_tol: 0.0,
            x0: Array1::zeros(dimension),
            x1: Array1::zeros(dimension),
            trace_every: 1,
        }
    }

    pub fn with_start(mut self, x0: Array1<f64>, x1: Array1<f64>) -> Self {
        self.x0 = x0;
        self.x1 = x1;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.fixed_point_tol = tol;
        self
    }

    pub fn with_trace_every(mut self, every: u64) -> Self {
        self.trace_every = every;
        self
    }
}

/// Reference data for rate diagnostics: the optimal value and, on synthetic
/// problems, a minimizer.
#[derive(Debug, Clone, Default)]
pub struct TraceReference {
    pub f_ref: Option<f64>,
    pub x_ref: Option<Array1<f64>>,
}

impl TraceReference {
    pub fn value(f_ref: f64) -> Self {
        Self { f_ref: Some(f_ref), x_ref: None }
    }

    pub fn minimizer(f_ref: f64, x_ref: Array1<f64>) -> Self {
        Self { f_ref: Some(f_ref), x_ref: Some(x_ref) }
    }
}

/// Training/test accuracy of an iterate, evaluated on recorded rows only.
pub trait AccuracyMonitor: Sync {
    fn accuracies(&self, x: &Array1<f64>) -> (Option<f64>, Option<f64>);
}

/// The quantities needed to fill one trace row at index `k`.
#[derive(Debug, Clone, Copy)]
pub struct IterState<'a> {
    pub k: u64,
    pub x: &'a Array1<f64>,
    pub x_prev: &'a Array1<f64>,
    pub y: &'a Array1<f64>,
}

/// One recorded iteration; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: u64,
    /// `F(x^k)`
    pub fv: f64,
    /// `(F(x^k) − F_ref) / (F(x^0) − F_ref)`
    pub nofv: Option<f64>,
    /// `η_k = F(x^k) − F_ref`
    pub eta: Option<f64>,
    /// `τ_k = ‖x^k − x^{k−1}‖² / (2β)`
    pub tau: f64,
    /// `‖x^k − x^{k−1}‖`
    pub dci: f64,
    /// `t_{k−1}² η_k`
    pub scaled_fv: Option<f64>,
    /// `t_{k−1} ‖x^k − x^{k−1}‖`
    pub scaled_dci: Option<f64>,
    /// `ε_k = 2β t_{k−1}² η_k + ‖z^k − x_ref‖²` with `z^k = t_k y^k + (1 − t_k) x^k`
    pub epsilon: Option<f64>,
    pub train_acc: Option<f64>,
    pub test_acc: Option<f64>,
}

pub const TRACE_HEADER: [&str; 11] =
    ["k", "fv", "nofv", "eta", "tau", "dci", "scaled_fv", "scaled_dci", "epsilon", "train_acc", "test_acc"];

/// Fills every diagnostic of a trace row. `f_initial` is `F(x^0)`; NOFV is
/// left empty when it equals `F_ref`. Scaled columns are left empty for plain
/// FBA, where `t ≡ 1` carries no rate information.
pub fn compute_trace_row<P: Problem + ?Sized>(
    p: &P,
    state: IterState<'_>,
    schedule: &MomentumSchedule,
    beta: f64,
    reference: &TraceReference,
    f_initial: f64,
) -> TraceRow {
    let fv = p.objective(state.x);
    let diff = state.x - state.x_prev;
    let dci = norm(&diff);
    let tau = dci * dci / (2.0 * beta);
    let eta = reference.f_ref.map(|f_ref| fv - f_ref);
    let nofv = reference.f_ref.and_then(|f_ref| {
        let denom = f_initial - f_ref;
        (denom != 0.0).then(|| (fv - f_ref) / denom)
    });
    let t_prev = schedule.t_value(state.k - 1);
    let momentum = !schedule.is_momentum_free();
    let scaled_fv = eta.filter(|_| momentum).map(|e| t_prev * t_prev * e);
    let scaled_dci = momentum.then_some(t_prev * dci);
    let epsilon = match (&reference.x_ref, eta) {
        (Some(x_ref), Some(eta)) => {
            let t_k = schedule.t_value(state.k);
            let z = state.y * t_k + state.x * (1.0 - t_k);
            let gap = z - x_ref;
            Some(2.0 * beta * t_prev * t_prev * eta + gap.dot(&gap))
        }
        _ => None,
    };
    TraceRow {
        k: state.k,
        fv,
        nofv,
        eta,
        tau,
        dci,
        scaled_fv,
        scaled_dci,
        epsilon,
        train_acc: None,
        test_acc: None,
    }
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub schedule_id: String,
    pub beta: f64,
    /// `F(x^0)`
    pub f_initial: f64,
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Writes the trace CSV (header plus one line per recorded row).
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
        if self.rows.is_empty() {
            w.write_record(TRACE_HEADER)?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub solution: Array1<f64>,
    /// Index `k` of the returned iterate `x^k`.
    pub iterations: u64,
    pub converged: bool,
    pub trace: SolverTrace,
}

/// Runs FBA/AFBA from `x^0, x^1` until `x^{max_iters}` or the fixed-point
/// tolerance is met.
///
/// Rows are recorded for `k = 1`, every multiple of `trace_every`, and the
/// final iterate. A non-finite iterate aborts the run with its index.
pub fn solve<P: Problem + ?Sized>(
    p: &P,
    cfg: &SolveConfig,
    reference: &TraceReference,
    monitor: Option<&dyn AccuracyMonitor>,
) -> Result<SolveOutput, SolveError> {
    check_beta(p, cfg.beta)?;
    check_dim(p, &cfg.x0)?;
    check_dim(p, &cfg.x1)?;
    if cfg.max_iters == 0 || cfg.trace_every == 0 {
        return Err(SolveError::InvalidConfig("max_iters and trace_every must be positive".into()));
    }
    if !(cfg.fixed_point_tol >= 0.0) {
        return Err(SolveError::InvalidConfig(format!(
            "fixed_point_tol must be nonnegative, got {}",
            cfg.fixed_point_tol
        )));
    }
    if let Some(x_ref) = &reference.x_ref {
        check_dim(p, x_ref)?;
    }
    let schedule = &cfg.schedule;
    schedule.prefill(cfg.max_iters + 1);

    let mut x_prev = cfg.x0.clone();
    let mut x = cfg.x1.clone();
    let f_initial = p.objective(&x_prev);
    let mut rows = Vec::new();
    let mut converged = false;
    let mut k: u64 = 1;
    loop {
        let theta = schedule.theta(k)?;
        let y = if theta == 0.0 { x.clone() } else { &x + &((&x - &x_prev) * theta) };
        let last = converged || k >= cfg.max_iters;
        if k == 1 || last || k.is_multiple_of(cfg.trace_every) {
            let state = IterState { k, x: &x, x_prev: &x_prev, y: &y };
            let mut row = compute_trace_row(p, state, schedule, cfg.beta, reference, f_initial);
            if !row.fv.is_finite() {
                return Err(SolveError::NonFinite { k });
            }
            if let Some(m) = monitor {
                (row.train_acc, row.test_acc) = m.accuracies(&x);
            }
            rows.push(row);
        }
        if last {
            break;
        }
        let x_next = p.forward_backward(cfg.beta, &y);
        if !x_next.iter().all(|v| v.is_finite()) {
            return Err(SolveError::NonFinite { k: k + 1 });
        }
        if cfg.fixed_point_tol > 0.0 {
            let step = norm(&(&x_next - &x));
            converged = step <= cfg.fixed_point_tol * (1.0 + norm(&x));
        }
        x_prev = std::mem::replace(&mut x, x_next);
        k += 1;
    }
    Ok(SolveOutput {
        solution: x,
        iterations: k,
        converged,
        trace: SolverTrace { schedule_id: schedule.id(), beta: cfg.beta, f_initial, rows },
    })
}
