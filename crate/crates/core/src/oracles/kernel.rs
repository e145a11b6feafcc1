//! Bounded kernel functions of `−Δφ = π(y)φ` on the plane:
//! `φ₀ = Z` and, for even α, `φ₁,₂ = r^{α/2}/(1+r^α) · (cos, sin)(αθ/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::plane::ScaledWeight;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    Radial,
    Cosine,
    Sine,
}

impl KernelMode {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            0 => Ok(KernelMode::Radial),
            1 => Ok(KernelMode::Cosine),
            2 => Ok(KernelMode::Sine),
            _ => Err(Error::param("which", format!("{i} not in {{0, 1, 2}}"))),
        }
    }
}

/// `φ(r, θ) − φ(r₀, θ₀)`, evaluated without cancellation for the radial mode.
fn mode_difference<T: Scalar>(alpha: T, mode: KernelMode, r: T, th: T, r0: T, th0: T) -> T {
    let one = T::one();
    match mode {
        KernelMode::Radial => {
            let (a, b) = (r.powf(alpha), r0.powf(alpha));
            T::lit(2.0) * (b - a) / ((one + a) * (one + b))
        }
        _ => mode_value(alpha, mode, r, th) - mode_value(alpha, mode, r0, th0),
    }
}

pub fn mode_value<T: Scalar>(alpha: T, mode: KernelMode, r: T, th: T) -> T {
    let one = T::one();
    let ra = r.powf(alpha);
    let half = alpha * T::lit(0.5);
    match mode {
        KernelMode::Radial => (one - ra) / (one + ra),
        KernelMode::Cosine => r.powf(half) / (one + ra) * (half * th).cos(),
        KernelMode::Sine => r.powf(half) / (one + ra) * (half * th).sin(),
    }
}

/// `max |−Δφ − πφ| / (π(1+|φ|))` over the given radii and eight angles,
/// with polar fourth-order differences on steps proportional to the radius.
pub fn kernel_residual<T: Scalar>(alpha: T, mode: KernelMode, radii: &[T]) -> Result<T> {
    let w = ScaledWeight::new(alpha)?;
    if mode != KernelMode::Radial && !crate::bubble::is_even_integer(alpha) {
        return Err(Error::param("alpha", "angular kernel modes exist only for even alpha"));
    }
    let c = [T::lit(1.0), T::lit(-8.0), T::zero(), T::lit(8.0), T::lit(-1.0)];
    let c2 = [T::lit(-1.0), T::lit(16.0), T::lit(-30.0), T::lit(16.0), T::lit(-1.0)];
    let mut worst = T::zero();
    for &r in radii {
        let hr = r * T::lit(2e-3);
        let ht = T::lit(2e-3);
        for k in 0..8 {
            let th = T::lit(0.3 + k as f64 * std::f64::consts::FRAC_PI_4);
            let (mut d1, mut d2, mut dtt) = (T::zero(), T::zero(), T::zero());
            for j in 0..5 {
                let off = T::lit(j as f64 - 2.0);
                let fr = mode_difference(alpha, mode, r + off * hr, th, r, th);
                let ft = mode_difference(alpha, mode, r, th + off * ht, r, th);
                d1 = d1 + c[j] * fr;
                d2 = d2 + c2[j] * fr;
                dtt = dtt + c2[j] * ft;
            }
            let ur = d1 / (T::lit(12.0) * hr);
            let urr = d2 / (T::lit(12.0) * hr * hr);
            let utt = dtt / (T::lit(12.0) * ht * ht);
            let lap = urr + ur / r + utt / (r * r);
            let phi = mode_value(alpha, mode, r, th);
            let pi = w.weight(r);
            let res = (-lap - pi * phi).abs() / (pi * (T::one() + phi.abs()));
            worst = worst.max(res);
        }
    }
    Ok(worst)
}

/// `max |φ(y) − φ(ℜy)|` for the rotation by `2π/α` (that is `π/κ` with `α = 2κ`).
pub fn symmetry_defect<T: Scalar>(alpha: T, mode: KernelMode, radii: &[T]) -> T {
    let angle = T::lit(2.0) * T::PI() / alpha;
    let mut worst = T::zero();
    for &r in radii {
        for k in 0..8 {
            let th = T::lit(0.3 + k as f64 * std::f64::consts::FRAC_PI_4);
            worst = worst.max((mode_value(alpha, mode, r, th) - mode_value(alpha, mode, r, th + angle)).abs());
        }
    }
    worst
}

/// Default sample radii spanning the core and the decay region.
pub fn default_radii() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.8, 1.0, 1.3, 2.0, 4.0, 8.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_mode_for_odd_alpha() {
        let r = kernel_residual(3.0f64, KernelMode::Radial, &default_radii()).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn angular_modes_for_even_alpha() {
        for mode in [KernelMode::Cosine, KernelMode::Sine] {
            let r = kernel_residual(4.0f64, mode, &default_radii()).unwrap();
            assert!(r < 1e-6, "{mode:?}: {r}");
            assert!(symmetry_defect(4.0, mode, &default_radii()) > 0.1);
        }
        assert!(symmetry_defect(4.0f64, KernelMode::Radial, &default_radii()) < 1e-15);
    }

    #[test]
    fn angular_modes_rejected_for_odd_alpha() {
        assert!(kernel_residual(3.0f64, KernelMode::Cosine, &[1.0]).is_err());
    }
}
