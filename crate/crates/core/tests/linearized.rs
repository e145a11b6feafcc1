use std::f64::consts::PI;

use meanfield_core::error::Error;
use meanfield_core::fit::linear_fit;
use meanfield_core::geometry::{OuterBoundary, PiercedDomainSpec};
use meanfield_core::linalg::max_abs;
use meanfield_core::linearized::{error_term, residual_scaling_study, sigma_p, LinearizedSystem};
use meanfield_core::pipeline::{prepare, Discretization};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coarse() -> Discretization {
    Discretization {
        h_far: 0.1,
        grading: 0.25,
        resolve_concentration: false,
        ..Discretization::default()
    }
}

/// `L` as a dense matrix: local part plus `bbᵀ/λ`.
fn dense_operator(sys: &LinearizedSystem) -> DMatrix<f64> {
    let a = sys.local_matrix();
    let n = a.n_rows();
    let b = sys.coupling();
    let mut m = DMatrix::zeros(n, n);
    for (i, j, v) in a.triplets() {
        m[(i, j)] += v;
    }
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += b[i] * b[j] / sys.lambda();
        }
    }
    m
}

#[test]
fn rank_one_solve_matches_dense_direct_solve() {
    let lambda = 12.0 * PI;
    let spec = PiercedDomainSpec::centered_unit_disk(2e-2, None).unwrap();
    let setup = prepare(&spec, lambda, &coarse()).unwrap();
    let sys = LinearizedSystem::assemble(setup.space.clone(), &setup.pw, lambda, false).unwrap();
    let n = sys.space().n_free();
    assert!(n <= 3000, "{n} unknowns");
    let dense = dense_operator(&sys);
    let lu = dense.clone().lu();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (phi, info) = sys.solve_load(&rhs).unwrap();
        let reference = lu.solve(&DVector::from_vec(rhs.clone())).unwrap();
        let diff = phi.iter().zip(reference.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-9 * max_abs(reference.as_slice()).max(1.0), "diff {diff}");
        assert!(info.relative_residual < 1e-10);
        let applied = sys.apply(&phi);
        let back = &dense * DVector::from_vec(phi.clone());
        assert!(applied.iter().zip(back.iter()).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}

#[test]
fn symmetric_mode_needs_a_symmetric_mesh() {
    let lambda = 16.0 * PI;
    let spec = PiercedDomainSpec::centered_unit_disk(1e-3, None).unwrap();
    let setup = prepare(&spec, lambda, &coarse()).unwrap();
    let r = LinearizedSystem::assemble(setup.space.clone(), &setup.pw, lambda, true);
    assert!(matches!(r, Err(Error::MissingSymmetry)));
}

#[test]
fn stability_ratio_stays_bounded_in_log_epsilon() {
    let lambda = 12.0 * PI;
    let eps = [1e-3, 1e-4, 1e-5, 1e-6];
    let mut ratios = Vec::new();
    for &e in &eps {
        let spec = PiercedDomainSpec::centered_unit_disk(e, None).unwrap();
        let setup = prepare(&spec, lambda, &Discretization::default()).unwrap();
        let sys = LinearizedSystem::assemble(setup.space.clone(), &setup.pw, lambda, false).unwrap();
        let r = error_term(&setup.space, &setup.pw, &setup.source, lambda).unwrap();
        let (phi, _) = sys.solve_quad(&r).unwrap();
        ratios.push(setup.space.h1_seminorm(phi.values()) / setup.space.lp_norm_quad(&r, 1.2));
    }
    let x: Vec<f64> = eps.iter().map(|e: &f64| e.ln().abs().ln()).collect();
    let y: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let fit = linear_fit(&x, &y).unwrap();
    assert!(fit.slope <= 1.3, "growth exponent {} from {ratios:?}", fit.slope);
}

#[test]
fn residual_slope_for_off_center_hole() {
    let spec = PiercedDomainSpec::new(OuterBoundary::unit_disk(), [0.3, 0.0], 1e-3, None).unwrap();
    let study = residual_scaling_study(&spec, 16.0 * PI, 1.2, &[1e-3, 1e-4, 1e-5, 1e-6], &Discretization::default())
        .unwrap();
    assert_eq!(study.rows.len(), 4);
    assert!((study.sigma_p - sigma_p(4.0, 1.2)).abs() < 1e-15);
    assert!(study.relative_error() < 0.25, "{:?}", study.fit);
    let mut buf = Vec::new();
    study.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "epsilon,delta,norm_p,sigma_p_target,mesh_dofs");
}

#[test]
fn residual_study_rejects_exponent_outside_range() {
    let spec = PiercedDomainSpec::centered_unit_disk(1e-3, None).unwrap();
    let r = residual_scaling_study(&spec, 12.0 * PI, 2.0, &[1e-3, 1e-4], &coarse());
    assert!(r.is_err());
}
