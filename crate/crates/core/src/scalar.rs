//! Scalar abstraction for the analytic layer.
//!
//! Calibration, quadrature in one variable, the whole-plane identities and
//! closed-form Green functions are written once over [`Scalar`] and used at
//! `f64` through the aliases exported from the crate root. The finite-element
//! pipeline is `f64` only because the sparse factorizations are.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for types that cannot represent
    /// ordinary finite constants, which no supported type does.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon scaled for comparisons in the calibration routines.
    #[inline]
    fn unit_roundoff() -> Self {
        Self::epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[inline]
pub(crate) fn two_pi<T: Scalar>() -> T {
    T::TAU()
}
