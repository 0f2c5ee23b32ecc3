//! Accelerated forward-backward splitting (AFBA) with a generalized Nesterov
//! momentum scheme.
//!
//! * [`prox`]: soft-thresholding and the bias-masked l1 prox.
//! * [`momentum`]: `t_k`/`θ_k` schedules and a finite-horizon checker of the
//!   conditions behind the accelerated rates.
//! * [`solver`]: the forward-backward operator, the FBA/AFBA loop and the
//!   per-iteration diagnostic trace.
//! * [`svm`]: the squared-hinge l1 kernel SVM as a composite problem.
//! * [`dataio`]: LIBSVM text parsing and deterministic splits.
//! * [`synthetic`]: seeded LASSO and separable quadratic problems.
//!
//! Data-parallel kernels (kernel matrix construction, matrix-vector
//! products) run on rayon when the default `parallel` feature is enabled and
//! fall back to a sequential loop otherwise; both paths produce bitwise
//! identical results.

pub mod dataio;
pub mod linalg;
pub mod momentum;
pub mod par;
pub mod prox;
pub mod solver;
pub mod svm;
pub mod synthetic;

pub use dataio::{parse_libsvm, split, SparseDataset};
pub use momentum::{check_momentum_condition, ConditionReport, MomentumSchedule, ScheduleKind};
pub use par::ExecPolicy;
pub use solver::{solve, Problem, SolveConfig, SolveOutput, SolverTrace, TraceReference, TraceRow};
pub use svm::SvmProblem;
