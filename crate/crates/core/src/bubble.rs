//! Calibrated bubble `w(x) = ln(2α²δ^α/(δ^α + |x−ξ|^α)²)` and its projection
//! onto functions vanishing on `∂Ω_ε`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundaryData, FeSpace};
use crate::field::{QuadField, ScalarField};
use crate::geometry::{dist, Point};
use crate::green::RegularPart;
use crate::mesh::BoundaryTag;
use crate::scalar::{two_pi, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams<T> {
    pub lambda: T,
    pub alpha: T,
    pub epsilon: T,
    pub delta: T,
    pub xi: [T; 2],
    pub robin_at_xi: T,
    pub gamma: T,
    pub symmetric_mode: bool,
}

/// `λ/(4π)`, defined for `λ > 8π` only.
pub fn alpha_of_lambda<T: Scalar>(lambda: T) -> Result<T> {
    let eight_pi = T::lit(4.0) * two_pi::<T>();
    if !(lambda > eight_pi) {
        return Err(Error::Subcritical {
            lambda: lambda.to_f64_lossy(),
        });
    }
    Ok(lambda / (T::lit(2.0) * two_pi::<T>()))
}

/// Whether `α` is an even integer, i.e. `λ ∈ 8πℕ`.
pub fn is_even_integer<T: Scalar>(alpha: T) -> bool {
    let half = alpha * T::lit(0.5);
    (half - half.round()).abs() <= T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) * half.abs().max(T::one())
}

/// `κ = λ/(8π)` when `λ ∈ 8πℕ`.
pub fn required_kappa<T: Scalar>(lambda: T) -> Option<u32> {
    let alpha = lambda / (T::lit(2.0) * two_pi::<T>());
    is_even_integer(alpha).then(|| (alpha * T::lit(0.5)).round().to_u32().unwrap_or(0))
}

fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    let m = a.max(b);
    if m == T::neg_infinity() {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `2 ln(δ^α + ε^α) − (α−2) ln ε − 2π(α+2) H`.
pub fn calibration_residual<T: Scalar>(alpha: T, delta: T, epsilon: T, robin: T) -> T {
    let two = T::lit(2.0);
    two * log_add_exp(alpha * delta.ln(), alpha * epsilon.ln())
        - (alpha - two) * epsilon.ln()
        - two_pi::<T>() * (alpha + two) * robin
}

/// `δ` from `δ^α = e^{π(α+2)H} ε^{(α−2)/2} − ε^α`.
pub fn delta_closed_form<T: Scalar>(alpha: T, epsilon: T, robin: T) -> Result<T> {
    let two = T::lit(2.0);
    let lead = (T::PI() * (alpha + two) * robin + (alpha - two) / two * epsilon.ln()).exp();
    let da = lead - epsilon.powf(alpha);
    if !(da > T::zero()) {
        return Err(Error::NoBracket(format!(
            "delta^alpha = {} is not positive",
            da.to_f64_lossy()
        )));
    }
    Ok(da.powf(T::one() / alpha))
}

/// Root of [`calibration_residual`] in `δ ∈ (ε, 1]`: bisection in `ln δ`,
/// then Newton to working precision.
pub fn solve_delta<T: Scalar>(alpha: T, epsilon: T, robin: T) -> Result<T> {
    let two = T::lit(2.0);
    if !(alpha > two) {
        return Err(Error::param("alpha", format!("{} must exceed 2", alpha.to_f64_lossy())));
    }
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::param("epsilon", format!("{} not in (0, 1)", epsilon.to_f64_lossy())));
    }
    let f = |s: T| calibration_residual(alpha, s.exp(), epsilon, robin);
    let (mut lo, mut hi) = (epsilon.ln(), T::zero());
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo < T::zero() && fhi >= T::zero()) {
        return Err(Error::NoBracket(format!(
            "calibration residual {} at delta = epsilon and {} at delta = 1; epsilon too large for the asymptotic regime",
            flo.to_f64_lossy(),
            fhi.to_f64_lossy()
        )));
    }
    for _ in 0..60 {
        let mid = (lo + hi) * T::lit(0.5);
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < T::lit(1e-3) {
            break;
        }
    }
    let mut s = (lo + hi) * T::lit(0.5);
    let ea = alpha * epsilon.ln();
    for _ in 0..50 {
        let r = f(s);
        // d/ds of 2 ln(e^{αs} + ε^α)
        let deriv = two * alpha / (T::one() + (ea - alpha * s).exp());
        let step = r / deriv;
        let next = (s - step).max(lo).min(hi);
        let done = (next - s).abs() <= T::lit(4.0) * T::epsilon() * s.abs().max(T::one());
        s = next;
        if done {
            break;
        }
    }
    Ok(s.exp())
}

/// `[ln(1/(δ^α+ε^α)²) + 4παH] / [(1/2π) ln(1/ε) + H]`.
pub fn gamma_coeff<T: Scalar>(alpha: T, delta: T, epsilon: T, robin: T) -> Result<T> {
    let two = T::lit(2.0);
    let tau = two_pi::<T>();
    let den = -epsilon.ln() / tau + robin;
    if den.abs() <= T::lit(1e3) * T::epsilon() * (epsilon.ln().abs() / tau + robin.abs()) {
        return Err(Error::param("epsilon", "denominator (1/2π) ln(1/ε) + H vanishes"));
    }
    let num = -two * log_add_exp(alpha * delta.ln(), alpha * epsilon.ln()) + two * tau * alpha * robin;
    Ok(num / den)
}

impl<T: Scalar> BubbleParams<T> {
    /// Full calibration from `(λ, ε, ξ, H(ξ,ξ))`.
    pub fn calibrate(lambda: T, epsilon: T, xi: [T; 2], robin_at_xi: T) -> Result<Self> {
        let alpha = alpha_of_lambda(lambda)?;
        let delta = solve_delta(alpha, epsilon, robin_at_xi)?;
        let gamma = gamma_coeff(alpha, delta, epsilon, robin_at_xi)?;
        Ok(BubbleParams {
            lambda,
            alpha,
            epsilon,
            delta,
            xi,
            robin_at_xi,
            gamma,
            symmetric_mode: is_even_integer(alpha),
        })
    }

    /// Target value `2π(α − 2)` of γ.
    pub fn gamma_target(&self) -> T {
        two_pi::<T>() * (self.alpha - T::lit(2.0))
    }

    /// `(8π + λ)/2`, the limit-profile coefficient, equal to `2π(α+2)`.
    pub fn profile_coefficient(&self) -> T {
        (T::lit(4.0) * two_pi::<T>() + self.lambda) * T::lit(0.5)
    }

    fn radius(&self, x: [T; 2]) -> T {
        let dx = x[0] - self.xi[0];
        let dy = x[1] - self.xi[1];
        (dx * dx + dy * dy).sqrt()
    }

    fn w_of_r(&self, r: T) -> T {
        let two = T::lit(2.0);
        let la = self.alpha * self.delta.ln();
        (two * self.alpha * self.alpha).ln() + la - two * log_add_exp(la, self.alpha * r.ln())
    }

    pub fn bubble(&self, x: [T; 2]) -> T {
        self.w_of_r(self.radius(x))
    }

    /// `|x−ξ|^{α−2} e^{w}`, the right-hand side of `−Δw`.
    pub fn source(&self, x: [T; 2]) -> T {
        let r = self.radius(x);
        ((self.alpha - T::lit(2.0)) * r.ln() + self.w_of_r(r)).exp()
    }

    /// `−Δw − |x−ξ|^{α−2}e^w` by fourth-order central differences.
    pub fn liouville_residual(&self, x: [T; 2]) -> T {
        let r = self.radius(x);
        let h = T::lit(1e-5).min(r / T::lit(100.0));
        let c = [T::lit(-1.0), T::lit(16.0), T::lit(-30.0), T::lit(16.0), T::lit(-1.0)];
        let mut lap = T::zero();
        for dir in 0..2 {
            let mut acc = T::zero();
            for (k, ck) in c.iter().enumerate() {
                let off = T::lit(k as f64 - 2.0) * h;
                let mut p = x;
                p[dir] = p[dir] + off;
                acc = acc + *ck * self.bubble(p);
            }
            lap = lap + acc / (T::lit(12.0) * h * h);
        }
        -lap - self.source(x)
    }

    pub fn to_f64(&self) -> BubbleParams<f64> {
        BubbleParams {
            lambda: self.lambda.to_f64_lossy(),
            alpha: self.alpha.to_f64_lossy(),
            epsilon: self.epsilon.to_f64_lossy(),
            delta: self.delta.to_f64_lossy(),
            xi: [self.xi[0].to_f64_lossy(), self.xi[1].to_f64_lossy()],
            robin_at_xi: self.robin_at_xi.to_f64_lossy(),
            gamma: self.gamma.to_f64_lossy(),
            symmetric_mode: self.symmetric_mode,
        }
    }
}

pub fn bubble<T: Scalar>(params: &BubbleParams<T>, x: [T; 2]) -> T {
    params.bubble(x)
}

pub fn bubble_liouville_residual<T: Scalar>(params: &BubbleParams<T>, x: [T; 2]) -> T {
    params.liouville_residual(x)
}

/// Bubble source sampled at the quadrature points of `space`.
pub fn source_field(space: &FeSpace, params: &BubbleParams<f64>) -> QuadField {
    space.quad_from_fn(|x| params.source(x))
}

/// Discrete projection: the Galerkin solution of `−Δv = |x−ξ|^{α−2}e^w`
/// with zero data on both boundary components.
pub fn project_bubble(space: &FeSpace, params: &BubbleParams<f64>) -> Result<ScalarField> {
    check_mesh_matches(space, params)?;
    let f = source_field(space, params);
    let mut pw = space.solve_dirichlet(&f, &BoundaryData::Zero)?;
    if params.symmetric_mode && space.mesh().symmetry().is_some() {
        space.symmetrize(pw.values_mut())?;
    }
    Ok(pw)
}

/// `w_I − h` where `h` is discrete-harmonic with the exact bubble as data.
/// Agrees with [`project_bubble`] up to the discretization error.
pub fn bubble_minus_harmonic(space: &FeSpace, params: &BubbleParams<f64>) -> Result<ScalarField> {
    check_mesh_matches(space, params)?;
    let data = |x: Point, _: BoundaryTag| params.bubble(x);
    let h = space.solve_dirichlet(&space.quad_zeros(), &BoundaryData::Function(&data))?;
    let mut out = ScalarField::interpolate(space.mesh().clone(), |x| params.bubble(x));
    out.axpy(-1.0, &h);
    for &i in space.constrained_nodes() {
        out.values_mut()[i] = 0.0;
    }
    Ok(out)
}

fn check_mesh_matches(space: &FeSpace, params: &BubbleParams<f64>) -> Result<()> {
    let (c, r) = space
        .mesh()
        .hole()
        .ok_or_else(|| Error::InvalidDomain("projection needs a mesh of the pierced domain".into()))?;
    if dist(c, params.xi) > 1e-12 || (r - params.epsilon).abs() > 1e-12 * r {
        return Err(Error::param("mesh", "hole center or radius differs from the bubble parameters"));
    }
    Ok(())
}

/// `w − ln(2α²δ^α) + 4παH(x,ξ) − γG(x,ξ)`, the leading behavior of the projection.
pub fn projection_expansion(params: &BubbleParams<f64>, green: &RegularPart, x: Point) -> Result<f64> {
    let a = params.alpha;
    let base = (2.0 * a * a).ln() + a * params.delta.ln();
    Ok(params.bubble(x) - base + 2.0 * std::f64::consts::TAU * a * green.regular(x)? - params.gamma * green.green(x)?)
}

/// Largest nodal gap between the projection and its expansion at vertices
/// farther than `margin` from both boundary components.
pub fn expansion_discrepancy(
    pw: &ScalarField,
    params: &BubbleParams<f64>,
    green: &RegularPart,
    margin: f64,
) -> Result<f64> {
    let mesh = pw.mesh();
    let outer: Vec<Point> = boundary_points(mesh, BoundaryTag::Outer);
    let mut worst: f64 = 0.0;
    let mut any = false;
    for (i, &x) in mesh.vertices().iter().enumerate() {
        let to_hole = dist(x, params.xi) - params.epsilon;
        let to_outer = outer.iter().map(|&p| dist(p, x)).fold(f64::INFINITY, f64::min);
        if to_hole > margin && to_outer > margin {
            any = true;
            worst = worst.max((pw.values()[i] - projection_expansion(params, green, x)?).abs());
        }
    }
    if !any {
        return Err(Error::EmptySet("no vertices beyond the margin".into()));
    }
    Ok(worst)
}

pub(crate) fn boundary_points(mesh: &crate::mesh::TriMesh, tag: BoundaryTag) -> Vec<Point> {
    mesh.vertices()
        .iter()
        .zip(mesh.tags())
        .filter(|(_, t)| **t == tag)
        .map(|(p, _)| *p)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub lambda: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub robin: f64,
}

impl From<&BubbleParams<f64>> for CalibrationRow {
    fn from(p: &BubbleParams<f64>) -> Self {
        CalibrationRow {
            lambda: p.lambda,
            alpha: p.alpha,
            epsilon: p.epsilon,
            delta: p.delta,
            gamma: p.gamma,
            robin: p.robin_at_xi,
        }
    }
}

pub fn write_calibration_csv(rows: &[CalibrationRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "lambda,alpha,epsilon,delta,gamma,robin")?;
    for r in rows {
        writeln!(
            out,
            "{:.15e},{:.15e},{:.6e},{:.15e},{:.15e},{:.15e}",
            r.lambda, r.alpha, r.epsilon, r.delta, r.gamma, r.robin
        )?;
    }
    Ok(())
}
