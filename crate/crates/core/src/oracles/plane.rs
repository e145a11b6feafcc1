//! Whole-plane integrals of the scaled weight `π(y) = 2α²|y|^{α−2}/(1+|y|^α)²`.
//!
//! With `t = |y|^α` every integral reduces to `4πα ∫_0^∞ g(t) dt`; the tail
//! `[1, ∞)` is mapped to `(0, 1]` by `t = 1/s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad1d::integrate;
use crate::scalar::{two_pi, Scalar};

/// `π(y)` and `Z(y) = (1−|y|^α)/(1+|y|^α)` as functions of `|y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledWeight<T> {
    pub alpha: T,
}

impl<T: Scalar> ScaledWeight<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha > T::lit(2.0)) {
            return Err(Error::param("alpha", format!("{} must exceed 2", alpha.to_f64_lossy())));
        }
        Ok(ScaledWeight { alpha })
    }

    pub fn weight(&self, r: T) -> T {
        let a = self.alpha;
        let ra = r.powf(a);
        T::lit(2.0) * a * a * r.powf(a - T::lit(2.0)) / ((T::one() + ra) * (T::one() + ra))
    }

    pub fn z(&self, r: T) -> T {
        let ra = r.powf(self.alpha);
        (T::one() - ra) / (T::one() + ra)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneIntegrals<T> {
    pub alpha: T,
    /// `∫π`.
    pub i0: T,
    /// `∫πZ`.
    pub i1: T,
    /// `∫ ln|y| πZ`.
    pub i2: T,
    pub error_estimate: T,
}

/// `∫_0^∞ g(t) dt` split at 1, the tail through `t = 1/s`.
fn half_line<T: Scalar>(g: impl Fn(T) -> T, tol: T) -> Result<(T, T)> {
    let head = integrate(&g, T::zero(), T::one(), tol, T::zero())?;
    let tail = integrate(
        |s: T| {
            if s == T::zero() {
                T::zero()
            } else {
                g(T::one() / s) / (s * s)
            }
        },
        T::zero(),
        T::one(),
        tol,
        T::zero(),
    )?;
    Ok((head.value + tail.value, head.error + tail.error))
}

pub fn plane_integrals<T: Scalar>(alpha: T) -> Result<PlaneIntegrals<T>> {
    plane_integrals_with_tolerance(alpha, T::lit(1e-12))
}

pub fn plane_integrals_with_tolerance<T: Scalar>(alpha: T, tol: T) -> Result<PlaneIntegrals<T>> {
    ScaledWeight::new(alpha)?;
    let one = T::one();
    let c = T::lit(2.0) * two_pi::<T>() * alpha;
    let (a0, e0) = half_line(|t: T| one / ((one + t) * (one + t)), tol)?;
    let (a1, e1) = half_line(|t: T| (one - t) / ((one + t) * (one + t) * (one + t)), tol)?;
    let (a2, e2) = half_line(
        |t: T| {
            if t == T::zero() {
                T::zero()
            } else {
                t.ln() / alpha * (one - t) / ((one + t) * (one + t) * (one + t))
            }
        },
        tol,
    )?;
    Ok(PlaneIntegrals {
        alpha,
        i0: c * a0,
        i1: c * a1,
        i2: c * a2,
        error_estimate: c * (e0 + e1 + e2),
    })
}

/// `‖Z‖_{L_α} = ‖ |y|^{(α−2)/2}/(1+|y|^α) Z ‖_{L²(ℝ²)}`; the exact value is
/// `sqrt(2π/(3α))`.
pub fn z_weighted_norm<T: Scalar>(alpha: T, tol: T) -> Result<T> {
    ScaledWeight::new(alpha)?;
    let one = T::one();
    let (v, _) = half_line(
        |t: T| (one - t) * (one - t) / ((one + t) * (one + t) * (one + t) * (one + t)),
        tol,
    )?;
    Ok((two_pi::<T>() / alpha * v).sqrt())
}
