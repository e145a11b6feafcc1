//! Blow-up solutions of `−Δu = λ e^u / ∫e^u` with zero Dirichlet data on a
//! planar domain with a small round hole, built by a bubble ansatz plus a
//! Picard correction, and checked against independent reference solvers.
//!
//! The analytic layer (calibration, one-dimensional quadrature, whole-plane
//! integrals, closed-form Green functions, plane kernel functions) is generic
//! over [`Scalar`]; the `*F64` aliases below fix it to `f64`. Meshing,
//! assembly and every solve are `f64` only.

// Guards are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubble;
pub mod contraction;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod field;
pub mod fit;
pub mod geometry;
pub mod green;
pub mod linalg;
pub mod linearized;
pub mod mesh;
pub mod mesh_io;
pub mod oracles;
pub mod pipeline;
pub mod quad1d;
pub mod quadrature;
pub mod scalar;

pub use bubble::{alpha_of_lambda, project_bubble, required_kappa, solve_delta, BubbleParams};
pub use contraction::{solve_fixed_point, FixedPointOptions, SolveReport};
pub use error::{Error, Result};
pub use experiment::{run_plan, verify_identities, ExperimentPlan, RunDescriptor};
pub use fem::{BoundaryData, FeSpace};
pub use field::{QuadField, ScalarField};
pub use geometry::{OuterBoundary, PiercedDomainSpec, Point};
pub use green::{green_function, RegularPart};
pub use linearized::{error_term, LinearizedSystem};
pub use mesh::{build_mesh, BoundaryTag, TriMesh};
pub use oracles::plane::{plane_integrals, PlaneIntegrals, ScaledWeight};
pub use pipeline::{prepare, Discretization};
pub use quad1d::QuadResult;
pub use scalar::Scalar;

pub type BubbleParamsF64 = BubbleParams<f64>;
pub type PlaneIntegralsF64 = PlaneIntegrals<f64>;
pub type ScaledWeightF64 = ScaledWeight<f64>;
pub type QuadResultF64 = QuadResult<f64>;
