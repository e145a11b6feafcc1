//! Shared setup: Robin value, calibration, graded mesh and projected bubble.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bubble::{project_bubble, required_kappa, source_field, BubbleParams};
use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::field::{QuadField, ScalarField};
use crate::geometry::{OuterBoundary, PiercedDomainSpec};
use crate::green::RegularPart;
use crate::linalg::SolverOptions;
use crate::mesh::{build_mesh_with, build_unpierced_mesh, MeshOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Discretization {
    pub h_far: f64,
    pub grading: f64,
    pub quadrature_order: usize,
    /// Cap element sizes at δ/6 around the concentration annulus.
    pub resolve_concentration: bool,
    /// Mesh size for the finite-element Green solve on polygons.
    pub green_h: f64,
    pub direct_limit: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            h_far: 0.05,
            grading: 0.1,
            quadrature_order: 5,
            resolve_concentration: true,
            green_h: 0.02,
            direct_limit: SolverOptions::default().direct_limit,
        }
    }
}

impl Discretization {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            direct_limit: self.direct_limit,
            ..SolverOptions::default()
        }
    }
}

/// Everything downstream solvers need for one `(λ, ε)` configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub spec: PiercedDomainSpec,
    pub params: BubbleParams<f64>,
    pub green: RegularPart,
    pub space: Arc<FeSpace>,
    pub pw: ScalarField,
    /// `|x−ξ|^{α−2}e^w` at quadrature points.
    pub source: QuadField,
    pub stage_seconds: Vec<(String, f64)>,
}

/// Regular part of the Green function of the unpierced domain at `spec.hole_center`.
pub fn regular_part(spec: &PiercedDomainSpec, disc: &Discretization) -> Result<RegularPart> {
    match &spec.outer {
        OuterBoundary::Disk { .. } => RegularPart::for_domain(&spec.outer, spec.hole_center, None),
        outer => {
            let mesh = build_unpierced_mesh(outer, spec.hole_center, disc.green_h, spec.symmetry_order)?;
            let space = FeSpace::with_options(Arc::new(mesh), disc.quadrature_order, disc.solver_options())?;
            RegularPart::for_domain(outer, spec.hole_center, Some(&space))
        }
    }
}

/// Refuses `λ ∈ 8πℕ` unless the spec carries `κ = λ/(8π)`.
pub fn check_symmetry_hypothesis(spec: &PiercedDomainSpec, lambda: f64) -> Result<()> {
    if let Some(kappa) = required_kappa(lambda) {
        if spec.symmetry_order != Some(kappa) {
            return Err(Error::SymmetryRequired { lambda, kappa });
        }
    }
    Ok(())
}

/// Calibrates, meshes and projects. Does not enforce the symmetry hypothesis.
pub fn prepare(spec: &PiercedDomainSpec, lambda: f64, disc: &Discretization) -> Result<Setup> {
    spec.validate()?;
    let mut stages = Vec::new();
    let t0 = Instant::now();
    let green = regular_part(spec, disc)?;
    stages.push(("green".to_string(), t0.elapsed().as_secs_f64()));

    let t1 = Instant::now();
    let params = BubbleParams::calibrate(lambda, spec.hole_radius, spec.hole_center, green.robin())?;
    if params.delta >= spec.distance_to_outer() {
        return Err(Error::param(
            "epsilon",
            format!("calibrated delta {} exceeds the distance to the outer boundary", params.delta),
        ));
    }
    let mut opts = MeshOptions::new(disc.h_far, disc.grading);
    if disc.resolve_concentration {
        opts = opts.with_concentration(params.delta);
    }
    let mesh = Arc::new(build_mesh_with(spec, &opts)?);
    let space = Arc::new(FeSpace::with_options(mesh, disc.quadrature_order, disc.solver_options())?);
    stages.push(("mesh".to_string(), t1.elapsed().as_secs_f64()));

    let t2 = Instant::now();
    let pw = project_bubble(&space, &params)?;
    let source = source_field(&space, &params);
    stages.push(("projection".to_string(), t2.elapsed().as_secs_f64()));
    log::info!(
        "prepared lambda/pi = {:.3}, eps = {:.1e}: delta = {:.4e}, {} vertices",
        lambda / std::f64::consts::PI,
        spec.hole_radius,
        params.delta,
        space.n_nodes()
    );
    Ok(Setup {
        spec: spec.clone(),
        params,
        green,
        space,
        pw,
        source,
        stage_seconds: stages,
    })
}
