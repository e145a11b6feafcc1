//! Picard iteration of `T(φ) = L⁻¹(N(φ) + R)` for the correction `φ` in
//! `u = Pw + φ`, with diagnostics for the limit profile and the energy.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bubble::BubbleParams;
use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::field::{QuadField, ScalarField};
use crate::geometry::{dist, PiercedDomainSpec, Point};
use crate::green::RegularPart;
use crate::linalg::dot;
use crate::linearized::{error_term, sigma_p, ExpIntegral, LinearizedSystem};
use crate::pipeline::{check_symmetry_hypothesis, prepare, Discretization, Setup};

/// `N(φ) = λe^{Pw+φ}/∫e^{Pw+φ} − k − kφ + k∫kφ/λ` at quadrature points,
/// where `k = λe^{Pw}/∫e^{Pw}` is the weight of `sys`.
pub fn nonlinear_term(sys: &LinearizedSystem, pw: &ScalarField, phi: &ScalarField) -> Result<QuadField> {
    let space = sys.space();
    let lambda = sys.lambda();
    let u: Vec<f64> = pw.values().iter().zip(phi.values()).map(|(a, b)| a + b).collect();
    let eu = ExpIntegral::from_nodal(space, &u)?.normalized(lambda);
    let phi_q = space.quad_from_nodal(phi.values());
    let k = sys.weight();
    let c = space.integrate_quad(&k.zip_map(&phi_q, |a, b| a * b)) / lambda;
    let mut out = eu;
    for ((o, &kq), &pq) in out.values_mut().iter_mut().zip(k.values()).zip(phi_q.values()) {
        *o += -kq - kq * pq + kq * c;
    }
    Ok(out)
}

/// One application of `T`.
pub fn contraction_step(
    sys: &LinearizedSystem,
    pw: &ScalarField,
    phi: &ScalarField,
    r_eps: &QuadField,
) -> Result<ScalarField> {
    let n = nonlinear_term(sys, pw, phi)?;
    let (next, _) = sys.solve_quad(&n.zip_map(r_eps, |a, b| a + b))?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Ball radius constant in `‖φ‖ ≤ R ε^{σ_p}|ln ε|`; diagnostic only.
    pub ball_radius: f64,
    pub p: f64,
    pub profile_annulus: (f64, f64),
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            max_iterations: 50,
            tolerance: 1e-10,
            ball_radius: 1.0,
            p: 1.2,
            profile_annulus: (0.5, 0.9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionState {
    pub iterate: usize,
    pub h1_norm: f64,
    pub step: f64,
    pub ratio: Option<f64>,
    pub ball_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub params: BubbleParams<f64>,
    pub vertices: usize,
    pub free_dofs: usize,
    pub phi_h1_norm: f64,
    pub pw_h1_norm: f64,
    /// `‖R_ε‖_p`.
    pub residual_norm_p: f64,
    /// Dual norm of the weak residual of `−Δu = λe^u/∫e^u`.
    pub weak_residual: f64,
    /// `‖T(φ) − φ‖` at the returned iterate.
    pub fixed_point_defect: f64,
    pub ball_bound: f64,
    pub inside_ball: bool,
    pub profile_discrepancy: Option<f64>,
    pub last_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub energy: f64,
    pub symmetry_defect: Option<f64>,
    pub inverse_norm_estimate: Option<f64>,
    pub states: Vec<ContractionState>,
    pub stage_seconds: Vec<(String, f64)>,
}

/// Runs mesh, calibration, projection and Picard iteration.
pub fn solve_fixed_point(
    spec: &PiercedDomainSpec,
    lambda: f64,
    disc: &Discretization,
    opts: &FixedPointOptions,
) -> Result<(ScalarField, SolveReport)> {
    check_symmetry_hypothesis(spec, lambda)?;
    let setup = prepare(spec, lambda, disc)?;
    solve_prepared(&setup, opts)
}

/// Picard iteration on an existing [`Setup`].
pub fn solve_prepared(setup: &Setup, opts: &FixedPointOptions) -> Result<(ScalarField, SolveReport)> {
    let lambda = setup.params.lambda;
    check_symmetry_hypothesis(&setup.spec, lambda)?;
    let space = &setup.space;
    let mut stages = setup.stage_seconds.clone();

    let t0 = Instant::now();
    let sys = LinearizedSystem::assemble(space.clone(), &setup.pw, lambda, setup.params.symmetric_mode)?;
    let r_eps = error_term(space, &setup.pw, &setup.source, lambda)?;
    stages.push(("assembly".to_string(), t0.elapsed().as_secs_f64()));

    let t1 = Instant::now();
    let eps = setup.params.epsilon;
    let ball = opts.ball_radius * eps.powf(sigma_p(setup.params.alpha, opts.p)) * eps.ln().abs();
    let mut phi = ScalarField::zeros(space.mesh().clone());
    let mut states = Vec::new();
    let mut prev_step: Option<f64> = None;
    let mut bad = 0usize;
    let mut converged = false;
    let mut max_ratio: Option<f64> = None;
    for it in 1..=opts.max_iterations {
        let next = contraction_step(&sys, &setup.pw, &phi, &r_eps)?;
        let diff: Vec<f64> = next.values().iter().zip(phi.values()).map(|(a, b)| a - b).collect();
        let step = space.h1_seminorm(&diff);
        let norm_prev = space.h1_seminorm(phi.values());
        let ratio = prev_step.map(|p| if p > 0.0 { step / p } else { 0.0 });
        if let Some(r) = ratio {
            max_ratio = Some(max_ratio.map_or(r, |m: f64| m.max(r)));
        }
        phi = next;
        let h1 = space.h1_seminorm(phi.values());
        if !h1.is_finite() {
            return Err(Error::NonFinite(format!("iterate {it} has non-finite norm")));
        }
        states.push(ContractionState {
            iterate: it,
            h1_norm: h1,
            step,
            ratio,
            ball_radius: ball,
        });
        log::debug!("iterate {it}: |phi| = {h1:.6e}, step = {step:.3e}, ratio = {ratio:?}");
        // Stop once the step is at the floor set by roundoff in the load vectors.
        if step < opts.tolerance * norm_prev.max(1.0) {
            converged = true;
            break;
        }
        match ratio {
            Some(r) if r >= 1.0 => {
                bad += 1;
                if bad >= 3 {
                    return Err(Error::NonContraction {
                        iterate: it,
                        ratio: r,
                        consecutive: bad,
                    });
                }
            }
            _ => bad = 0,
        }
        prev_step = Some(step);
    }
    let after = contraction_step(&sys, &setup.pw, &phi, &r_eps)?;
    let diff: Vec<f64> = after.values().iter().zip(phi.values()).map(|(a, b)| a - b).collect();
    let fixed_point_defect = space.h1_seminorm(&diff);
    stages.push(("iteration".to_string(), t1.elapsed().as_secs_f64()));

    let t2 = Instant::now();
    let mut u = setup.pw.clone();
    u.axpy(1.0, &phi);
    let weak_residual = weak_residual(space, u.values(), lambda)?;
    let profile_discrepancy = profile_check(&u, &setup.green, &setup.params, opts.profile_annulus).ok();
    let phi_h1 = space.h1_seminorm(phi.values());
    let symmetry_defect = if setup.params.symmetric_mode {
        Some(space.symmetry_defect(u.values())?)
    } else {
        None
    };
    let report = SolveReport {
        converged,
        iterations: states.len(),
        params: setup.params,
        vertices: space.n_nodes(),
        free_dofs: space.n_free(),
        phi_h1_norm: phi_h1,
        pw_h1_norm: space.h1_seminorm(setup.pw.values()),
        residual_norm_p: space.lp_norm_quad(&r_eps, opts.p),
        weak_residual,
        fixed_point_defect,
        ball_bound: ball,
        inside_ball: phi_h1 <= ball,
        profile_discrepancy,
        last_ratio: states.last().and_then(|s| s.ratio),
        max_ratio,
        energy: energy(space, u.values(), lambda)?,
        symmetry_defect,
        inverse_norm_estimate: sys.inverse_norm_estimate(),
        states,
        stage_seconds: {
            stages.push(("diagnostics".to_string(), t2.elapsed().as_secs_f64()));
            stages
        },
    };
    Ok((u, report))
}

/// Weak residual `F_i = ∫∇u·∇φ_i − λ∫e^uφ_i/∫e^u` on free vertices.
pub fn weak_residual_vector(space: &FeSpace, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let ku = space.stiffness().matvec(u);
    let load = space.load(&ExpIntegral::from_nodal(space, u)?.normalized(lambda));
    Ok(space.free_nodes().iter().map(|&i| ku[i] - load[i]).collect())
}

/// `sup_v ⟨res, v⟩/‖∇v‖` over discrete test functions.
pub fn weak_residual(space: &FeSpace, u: &[f64], lambda: f64) -> Result<f64> {
    space.dual_norm(&weak_residual_vector(space, u, lambda)?)
}

/// `max |u − 2π(α+2)G(·, ξ)|` over vertices with `r_in ≤ |x−ξ| ≤ r_out`.
pub fn profile_check(
    u: &ScalarField,
    green: &RegularPart,
    params: &BubbleParams<f64>,
    annulus: (f64, f64),
) -> Result<f64> {
    let coef = params.profile_coefficient();
    let mut worst: Option<f64> = None;
    for (x, &v) in u.mesh().vertices().iter().zip(u.values()) {
        let r = dist(*x, params.xi);
        if r >= annulus.0 && r <= annulus.1 {
            let d = (v - coef * green.green(*x)?).abs();
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
    }
    worst.ok_or_else(|| Error::EmptySet(format!("no vertices in annulus {annulus:?}")))
}

/// Same as [`profile_check`], restricted to points of a sampling list.
pub fn profile_at(u: &ScalarField, green: &RegularPart, params: &BubbleParams<f64>, points: &[Point]) -> Result<f64> {
    let coef = params.profile_coefficient();
    let mut worst: f64 = 0.0;
    for &x in points {
        worst = worst.max((u.eval(x)? - coef * green.green(x)?).abs());
    }
    Ok(worst)
}

/// `J(u) = ½∫|∇u|² − λ ln ∫e^u`.
pub fn energy(space: &FeSpace, u: &[f64], lambda: f64) -> Result<f64> {
    let ku = space.stiffness().matvec(u);
    let e = ExpIntegral::from_nodal(space, u)?;
    Ok(0.5 * dot(u, &ku) - lambda * e.log_integral())
}
