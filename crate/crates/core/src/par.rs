//! Row-parallel helpers with a sequential fallback.
//!
//! Only row-independent work is parallelized; every floating point reduction
//! runs sequentially inside one row so results are bitwise identical for
//! either policy and any thread count.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many rows the parallel path is not worth the dispatch.
#[cfg(feature = "parallel")]
const PARALLEL_MIN_ROWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecPolicy {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise identical
    /// to `Sequential`.
    Parallel,
}

impl Default for ExecPolicy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecPolicy::Parallel
        } else {
            ExecPolicy::Sequential
        }
    }
}

impl ExecPolicy {
    #[cfg(feature = "parallel")]
    fn use_rayon(self, rows: usize) -> bool {
        self == ExecPolicy::Parallel && rows >= PARALLEL_MIN_ROWS
    }
}

/// Fills each row of `out` with `f(row_index, row)`.
pub fn fill_rows<F>(policy: ExecPolicy, out: &mut Array2<f64>, f: F)
where
    F: Fn(usize, ndarray::ArrayViewMut1<'_, f64>) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.use_rayon(out.nrows()) {
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = policy;
    for (i, row) in out.axis_iter_mut(Axis(0)).enumerate() {
        f(i, row);
    }
}

/// Sequential dot product with a fixed summation order.
#[inline]
pub fn dot(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    match (a.as_slice(), b.as_slice()) {
        (Some(x), Some(y)) => x.iter().zip(y).map(|(p, q)| p * q).sum(),
        _ => a.iter().zip(b.iter()).map(|(p, q)| p * q).sum(),
    }
}

/// `out = mat · v`, rows computed independently.
pub fn gemv_into(policy: ExecPolicy, mat: ArrayView2<'_, f64>, v: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
    assert_eq!(mat.ncols(), v.len(), "gemv: column count mismatch");
    assert_eq!(mat.nrows(), out.len(), "gemv: row count mismatch");
    #[cfg(feature = "parallel")]
    if policy.use_rayon(mat.nrows()) {
        out.as_slice_mut()
            .expect("contiguous output")
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, o)| *o = dot(mat.row(i), v));
        return;
    }
    let _ = policy;
    for (o, row) in out.iter_mut().zip(mat.axis_iter(Axis(0))) {
        *o = dot(row, v);
    }
}

pub fn gemv(policy: ExecPolicy, mat: ArrayView2<'_, f64>, v: ArrayView1<'_, f64>) -> Array1<f64> {
    let mut out = Array1::zeros(mat.nrows());
    gemv_into(policy, mat, v, &mut out);
    out
}

/// `out = matᵀ · v` as a sequence of row axpys; deterministic but serial.
pub fn gemv_t(mat: ArrayView2<'_, f64>, v: ArrayView1<'_, f64>) -> Array1<f64> {
    assert_eq!(mat.nrows(), v.len(), "gemv_t: row count mismatch");
    let mut out = Array1::zeros(mat.ncols());
    for (row, &c) in mat.axis_iter(Axis(0)).zip(v.iter()) {
        if c != 0.0 {
            out.scaled_add(c, &row);
        }
    }
    out
}
