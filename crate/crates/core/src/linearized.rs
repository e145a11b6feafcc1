//! Error term of the projected bubble and the nonlocal linearized operator
//! `Lφ = −Δφ − kφ + (1/λ) k ∫kφ`, solved by a rank-one update of `A = −Δ − k`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::field::{QuadField, ScalarField};
use crate::fit::{linear_fit, LinearFit};
use crate::geometry::PiercedDomainSpec;
use crate::linalg::{dot, norm2, Csr, LinearSolver};
use crate::pipeline::{prepare, Discretization};

/// `∫ e^u` evaluated as `e^m ∫ e^{u−m}` with `m = max u`.
#[derive(Debug, Clone)]
pub struct ExpIntegral {
    pub offset: f64,
    /// `e^{u−m}` at quadrature points.
    pub scaled: QuadField,
    /// `∫ e^{u−m}`.
    pub scaled_integral: f64,
}

impl ExpIntegral {
    pub fn new(space: &FeSpace, u: &QuadField) -> Result<Self> {
        let offset = u.max();
        if !offset.is_finite() {
            return Err(Error::NonFinite("exponent field has a non-finite maximum".into()));
        }
        let scaled = u.map(|v| (v - offset).exp());
        let scaled_integral = space.integrate_quad(&scaled);
        if !(scaled_integral.is_finite() && scaled_integral > 0.0) {
            return Err(Error::NonFinite(format!("integral of exponential is {scaled_integral}")));
        }
        Ok(ExpIntegral {
            offset,
            scaled,
            scaled_integral,
        })
    }

    pub fn from_nodal(space: &FeSpace, u: &[f64]) -> Result<Self> {
        Self::new(space, &space.quad_from_nodal(u))
    }

    /// `ln ∫ e^u`.
    pub fn log_integral(&self) -> f64 {
        self.offset + self.scaled_integral.ln()
    }

    /// `λ e^u / ∫ e^u`.
    pub fn normalized(&self, lambda: f64) -> QuadField {
        let c = lambda / self.scaled_integral;
        self.scaled.map(|v| c * v)
    }
}

/// `R = λ e^{Pw}/∫e^{Pw} − |x−ξ|^{α−2}e^w` at the quadrature points.
pub fn error_term(space: &FeSpace, pw: &ScalarField, source: &QuadField, lambda: f64) -> Result<QuadField> {
    let e = ExpIntegral::from_nodal(space, pw.values())?;
    Ok(e.normalized(lambda).zip_map(source, |a, b| a - b))
}

/// `σ_p = (α−2)(2−p)/(2αp)`.
pub fn sigma_p(alpha: f64, p: f64) -> f64 {
    (alpha - 2.0) * (2.0 - p) / (2.0 * alpha * p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub delta: f64,
    pub norm_p: f64,
    pub sigma_p_target: f64,
    pub mesh_dofs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub alpha: f64,
    pub p: f64,
    pub rows: Vec<ScalingRow>,
    pub fit: LinearFit,
    pub sigma_p: f64,
}

impl ScalingStudy {
    pub fn relative_error(&self) -> f64 {
        (self.fit.slope - self.sigma_p).abs() / self.sigma_p
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "epsilon,delta,norm_p,sigma_p_target,mesh_dofs")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.6e},{:.12e},{:.12e},{:.12e},{}",
                r.epsilon, r.delta, r.norm_p, r.sigma_p_target, r.mesh_dofs
            )?;
        }
        Ok(())
    }
}

/// Fits `ln‖R_ε‖_p` against `ln ε` over `epsilons` with the hole of `spec` resized.
pub fn residual_scaling_study(
    spec: &PiercedDomainSpec,
    lambda: f64,
    p: f64,
    epsilons: &[f64],
    disc: &Discretization,
) -> Result<ScalingStudy> {
    if !(p > 1.0 && p <= 1.5) {
        return Err(Error::param("p", format!("{p} not in (1, 1.5]")));
    }
    if epsilons.len() < 2 {
        return Err(Error::param("epsilons", "need at least two values"));
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut s = spec.clone();
        s.hole_radius = eps;
        let setup = prepare(&s, lambda, disc)?;
        let r = error_term(&setup.space, &setup.pw, &setup.source, lambda)?;
        rows.push(ScalingRow {
            epsilon: eps,
            delta: setup.params.delta,
            norm_p: setup.space.lp_norm_quad(&r, p),
            sigma_p_target: sigma_p(setup.params.alpha, p),
            mesh_dofs: setup.space.n_free(),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.epsilon.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.norm_p.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    let alpha = lambda / (4.0 * std::f64::consts::PI);
    Ok(ScalingStudy {
        alpha,
        p,
        rows,
        fit,
        sigma_p: sigma_p(alpha, p),
    })
}

/// Assembled `L` on the free (interior) vertices.
#[derive(Debug)]
pub struct LinearizedSystem {
    space: Arc<FeSpace>,
    lambda: f64,
    symmetric_mode: bool,
    weight: QuadField,
    weight_integral: f64,
    /// `b_i = ∫ k φ_i` over free vertices.
    b: Vec<f64>,
    a: Csr,
    solver: LinearSolver,
    /// `A⁻¹ b`.
    v: Vec<f64>,
    denominator: f64,
    inverse_norm_estimate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolveInfo {
    pub relative_residual: f64,
    /// `‖ψ − Sψ‖/‖ψ‖` removed by pre-symmetrization (0 outside symmetric mode).
    pub symmetrization_change: f64,
}

/// Weight `k = λ e^u/∫e^u` at quadrature points.
pub fn weight_from(space: &FeSpace, u: &[f64], lambda: f64) -> Result<QuadField> {
    Ok(ExpIntegral::from_nodal(space, u)?.normalized(lambda))
}

impl LinearizedSystem {
    /// `L` with weight `k = λe^u/∫e^u`.
    pub fn assemble(space: Arc<FeSpace>, u: &ScalarField, lambda: f64, symmetric_mode: bool) -> Result<Self> {
        let weight = weight_from(&space, u.values(), lambda)?;
        Self::with_weight(space, weight, lambda, symmetric_mode)
    }

    pub fn with_weight(space: Arc<FeSpace>, weight: QuadField, lambda: f64, symmetric_mode: bool) -> Result<Self> {
        if symmetric_mode && space.mesh().symmetry().is_none() {
            return Err(Error::MissingSymmetry);
        }
        if weight.values().iter().any(|&k| !(k > 0.0)) {
            return Err(Error::NonFinite("weight is not strictly positive".into()));
        }
        let weight_integral = space.integrate_quad(&weight);
        let free = space.free_nodes();
        let mass = space.weighted_mass(&weight).submatrix(free, free);
        let a = space.stiffness_free().sub(&mass);
        let solver = LinearSolver::general(&a)?;
        let b = space.restrict(&space.load(&weight));
        let mut sys = LinearizedSystem {
            space,
            lambda,
            symmetric_mode,
            weight,
            weight_integral,
            b,
            a,
            solver,
            v: Vec::new(),
            denominator: 0.0,
            inverse_norm_estimate: None,
        };
        let v = sys.solve_a(&sys.b.clone())?;
        let denominator = lambda + dot(&sys.b, &v);
        if denominator.abs() < 1e-10 * lambda {
            return Err(Error::DegenerateRankOne { denominator, lambda });
        }
        sys.v = v;
        sys.denominator = denominator;
        if symmetric_mode {
            let est = sys.estimate_inverse_norm(6)?;
            log::info!("symmetric-subspace estimate of |A^-1|: {est:.3e}");
            sys.inverse_norm_estimate = Some(est);
        }
        Ok(sys)
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn symmetric_mode(&self) -> bool {
        self.symmetric_mode
    }

    pub fn weight(&self) -> &QuadField {
        &self.weight
    }

    /// `∫ k`, equal to λ up to quadrature roundoff.
    pub fn weight_integral(&self) -> f64 {
        self.weight_integral
    }

    pub fn coupling(&self) -> &[f64] {
        &self.b
    }

    pub fn local_matrix(&self) -> &Csr {
        &self.a
    }

    pub fn rank_one_denominator(&self) -> f64 {
        self.denominator
    }

    /// Power-iteration estimate of `‖A⁻¹‖` (symmetric subspace in symmetric mode).
    pub fn inverse_norm_estimate(&self) -> Option<f64> {
        self.inverse_norm_estimate
    }

    fn symmetrize_free(&self, x: &mut Vec<f64>) -> Result<()> {
        let mut full = self.space.extend_zero(x);
        self.space.symmetrize(&mut full)?;
        *x = self.space.restrict(&full);
        Ok(())
    }

    fn solve_a(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.solver.solve(rhs)?;
        if self.symmetric_mode {
            self.symmetrize_free(&mut z)?;
        }
        Ok(z)
    }

    fn estimate_inverse_norm(&self, iterations: usize) -> Result<f64> {
        let n = self.b.len();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        if self.symmetric_mode {
            self.symmetrize_free(&mut x)?;
        }
        let mut est = 0.0;
        for _ in 0..iterations {
            let nx = norm2(&x);
            for v in x.iter_mut() {
                *v /= nx;
            }
            let y = self.solve_a(&x)?;
            est = norm2(&y);
            x = y;
        }
        Ok(est)
    }

    /// `L` applied to free-node values, as a load vector (weak form).
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = self.a.matvec(phi);
        let c = dot(&self.b, phi) / self.lambda;
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o += c * b;
        }
        out
    }

    /// Solves `Lφ = F` for a load vector on free nodes.
    pub fn solve_load(&self, rhs: &[f64]) -> Result<(Vec<f64>, LinearSolveInfo)> {
        let mut rhs = rhs.to_vec();
        let mut change = 0.0;
        if self.symmetric_mode {
            let before = rhs.clone();
            self.symmetrize_free(&mut rhs)?;
            let diff: Vec<f64> = before.iter().zip(&rhs).map(|(a, b)| a - b).collect();
            change = norm2(&diff) / norm2(&before).max(1e-300);
            if change > 1e-12 {
                log::warn!("right-hand side was not symmetric; relative change {change:.3e}");
            }
        }
        let z = self.solve_a(&rhs)?;
        let c = dot(&self.b, &z) / self.denominator;
        let mut phi: Vec<f64> = z.iter().zip(&self.v).map(|(z, v)| z - c * v).collect();
        if self.symmetric_mode {
            self.symmetrize_free(&mut phi)?;
        }
        let res: Vec<f64> = self.apply(&phi).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let relative_residual = norm2(&res) / norm2(&rhs).max(1e-300);
        Ok((
            phi,
            LinearSolveInfo {
                relative_residual,
                symmetrization_change: change,
            },
        ))
    }

    /// Solves `Lφ = ψ` with `ψ` given at quadrature points.
    pub fn solve_quad(&self, psi: &QuadField) -> Result<(ScalarField, LinearSolveInfo)> {
        let rhs = self.space.restrict(&self.space.load(psi));
        let (phi, info) = self.solve_load(&rhs)?;
        let field = ScalarField::new(self.space.mesh().clone(), self.space.extend_zero(&phi))?;
        Ok((field.with_zero_tags(&self.space.constrained_tags()), info))
    }
}

pub fn assemble_linearized(
    space: Arc<FeSpace>,
    pw: &ScalarField,
    lambda: f64,
    symmetric_mode: bool,
) -> Result<LinearizedSystem> {
    LinearizedSystem::assemble(space, pw, lambda, symmetric_mode)
}

/// Solves `Lφ = ψ` for a piecewise-linear `ψ`.
pub fn solve_linearized(sys: &LinearizedSystem, psi: &ScalarField) -> Result<(ScalarField, LinearSolveInfo)> {
    sys.solve_quad(&sys.space.quad_from_nodal(psi.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PiercedDomainSpec;
    use std::f64::consts::PI;

    fn small_setup(kappa: Option<u32>, lambda: f64) -> crate::pipeline::Setup {
        let spec = PiercedDomainSpec::centered_unit_disk(1e-2, kappa).unwrap();
        let disc = Discretization {
            h_far: 0.15,
            grading: 0.3,
            ..Default::default()
        };
        prepare(&spec, lambda, &disc).unwrap()
    }

    #[test]
    fn weight_integrates_to_lambda_and_constants_are_near_kernel() {
        let s = small_setup(None, 12.0 * PI);
        let sys = assemble_linearized(s.space.clone(), &s.pw, 12.0 * PI, false).unwrap();
        assert!((sys.weight_integral() - 12.0 * PI).abs() < 1e-10 * 12.0 * PI);
        // L c = -M_k c + b (b·c)/λ vanishes for c = 1 once boundary rows are dropped.
        let n = s.space.n_nodes();
        let ones = vec![1.0; n];
        let full_mass = s.space.weighted_mass(sys.weight()).matvec(&ones);
        let b: Vec<f64> = s.space.load(sys.weight());
        let rows: Vec<f64> = s
            .space
            .free_nodes()
            .iter()
            .map(|&i| -full_mass[i] + b[i] * (sys.weight_integral() / 12.0 / PI))
            .collect();
        assert!(crate::linalg::max_abs(&rows) < 1e-12);
    }

    #[test]
    fn round_trip_recovers_field() {
        let s = small_setup(None, 12.0 * PI);
        let sys = assemble_linearized(s.space.clone(), &s.pw, 12.0 * PI, false).unwrap();
        let phi0: Vec<f64> = s
            .space
            .free_nodes()
            .iter()
            .map(|&i| {
                let p = s.space.mesh().vertices()[i];
                (3.0 * p[0]).sin() + p[1] * p[1]
            })
            .collect();
        let rhs = sys.apply(&phi0);
        let (phi, info) = sys.solve_load(&rhs).unwrap();
        let err: f64 = phi.iter().zip(&phi0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8 * crate::linalg::max_abs(&phi0));
        assert!(info.relative_residual < 1e-10);
    }

    #[test]
    fn symmetric_mode_requires_symmetry_map() {
        let s = small_setup(None, 12.0 * PI);
        let err = assemble_linearized(s.space.clone(), &s.pw, 16.0 * PI, true).unwrap_err();
        assert!(matches!(err, Error::MissingSymmetry));
    }

    #[test]
    fn symmetric_solution_is_invariant() {
        let s = small_setup(Some(2), 16.0 * PI);
        let sys = assemble_linearized(s.space.clone(), &s.pw, 16.0 * PI, true).unwrap();
        let psi = s.space.quad_from_fn(|p| 1.0 + p[0] * p[0] * p[1] * p[1]);
        let (phi, _) = sys.solve_quad(&psi).unwrap();
        assert!(s.space.symmetry_defect(phi.values()).unwrap() < 1e-12 * phi.max_abs());
        assert!(sys.inverse_norm_estimate().unwrap() > 0.0);
        let skew = s.space.quad_from_fn(|p| p[0]);
        let (_, info) = sys.solve_quad(&skew).unwrap();
        assert!(info.symmetrization_change > 0.5);
    }

    #[test]
    fn sigma_p_values() {
        assert!((sigma_p(4.0, 1.2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((sigma_p(3.0, 1.1) - 0.9 / 6.6).abs() < 1e-15);
    }
}
