//! Proximity operators for the backward half-step.
//!
//! Everything here is a pure function of its inputs. The threshold `mu` may be
//! zero, in which case every operator reduces to the identity.

use ndarray::{Array1, ArrayView1, ArrayViewMut1, Zip};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProxError {
    #[error("threshold must be nonnegative and finite, got {0}")]
    NegativeThreshold(f64),
    #[error("prox of the masked l1 norm needs at least one coordinate")]
    EmptyVector,
}

/// Threshold scale of an l1 proximity operator.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ProxParam(f64);

impl ProxParam {
    pub fn new(mu: f64) -> Result<Self, ProxError> {
        if mu >= 0.0 && mu.is_finite() {
            Ok(Self(mu))
        } else {
            Err(ProxError::NegativeThreshold(mu))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

#[inline]
pub(crate) fn shrink(t: f64, mu: f64) -> f64 {
    let mag = t.abs() - mu;
    if mag > 0.0 {
        mag.copysign(t)
    } else {
        0.0
    }
}

/// `max(|t| - mu, 0) * sign(t)`, with `sign(0) = 0`.
pub fn soft_threshold(t: f64, mu: f64) -> Result<f64, ProxError> {
    let mu = ProxParam::new(mu)?;
    Ok(shrink(t, mu.get()))
}

/// Coordinatewise soft-thresholding: the minimizer of `½‖u − v‖² + mu‖u‖₁`.
pub fn prox_l1(v: ArrayView1<'_, f64>, mu: f64) -> Result<Array1<f64>, ProxError> {
    let mu = ProxParam::new(mu)?.get();
    Ok(v.mapv(|t| shrink(t, mu)))
}

/// Prox of `mu‖Ĩ·‖₁` where `Ĩ` masks out the last coordinate.
///
/// The first `len - 1` entries are soft-thresholded; the trailing bias entry
/// passes through untouched.
pub fn prox_l1_bias(w: ArrayView1<'_, f64>, mu: f64) -> Result<Array1<f64>, ProxError> {
    let mut out = w.to_owned();
    prox_l1_bias_inplace(out.view_mut(), mu)?;
    Ok(out)
}

pub(crate) fn prox_l1_bias_inplace(mut w: ArrayViewMut1<'_, f64>, mu: f64) -> Result<(), ProxError> {
    let mu = ProxParam::new(mu)?.get();
    let n = w.len();
    if n == 0 {
        return Err(ProxError::EmptyVector);
    }
    w.slice_mut(ndarray::s![..n - 1])
        .mapv_inplace(|t| shrink(t, mu));
    Ok(())
}

pub(crate) fn prox_l1_inplace(w: ArrayViewMut1<'_, f64>, mu: f64) {
    Zip::from(w).for_each(|t| *t = shrink(*t, mu));
}
