use std::f64::consts::PI;

use meanfield_core::contraction::{energy, solve_fixed_point, weak_residual, FixedPointOptions};
use meanfield_core::error::Error;
use meanfield_core::geometry::PiercedDomainSpec;
use meanfield_core::pipeline::Discretization;

#[test]
fn twelve_pi_converges_with_small_ratio() {
    let spec = PiercedDomainSpec::centered_unit_disk(1e-4, None).unwrap();
    let disc = Discretization::default();
    let (u, rep) = solve_fixed_point(&spec, 12.0 * PI, &disc, &FixedPointOptions::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.max_ratio.unwrap() < 1.0);
    assert!(rep.fixed_point_defect <= 1e-9);
    assert_eq!(rep.states.len(), rep.iterations);
    let space = meanfield_core::fem::FeSpace::new(u.mesh().clone(), 5).unwrap();
    assert!(weak_residual(&space, u.values(), 12.0 * PI).unwrap() < 1e-8);
    assert!((energy(&space, u.values(), 12.0 * PI).unwrap() - rep.energy).abs() < 1e-8 * rep.energy.abs());
    assert!(rep.inside_ball);
}

#[test]
fn iteration_cap_reports_unconverged() {
    let spec = PiercedDomainSpec::centered_unit_disk(1e-3, None).unwrap();
    let opts = FixedPointOptions {
        max_iterations: 2,
        ..FixedPointOptions::default()
    };
    let (_, rep) = solve_fixed_point(&spec, 12.0 * PI, &Discretization::default(), &opts).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations, 2);
}

#[test]
fn quantized_lambda_requires_matching_symmetry() {
    let disc = Discretization::default();
    let opts = FixedPointOptions::default();
    let plain = PiercedDomainSpec::centered_unit_disk(1e-3, None).unwrap();
    assert!(matches!(
        solve_fixed_point(&plain, 16.0 * PI, &disc, &opts),
        Err(Error::SymmetryRequired { kappa: 2, .. })
    ));
    let wrong = PiercedDomainSpec::centered_unit_disk(1e-3, Some(3)).unwrap();
    assert!(solve_fixed_point(&wrong, 16.0 * PI, &disc, &opts).is_err());
}

#[test]
fn symmetric_solution_is_invariant_at_nodes() {
    let spec = PiercedDomainSpec::centered_unit_disk(1e-3, Some(2)).unwrap();
    let (u, rep) =
        solve_fixed_point(&spec, 16.0 * PI, &Discretization::default(), &FixedPointOptions::default()).unwrap();
    assert!(rep.converged);
    let perm = &u.mesh().symmetry().unwrap().perm;
    let v = u.values();
    let defect = (0..v.len()).map(|i| (v[perm[i]] - v[i]).abs()).fold(0.0, f64::max);
    assert!(defect < 1e-10, "{defect}");
    assert!(rep.symmetry_defect.unwrap() < 1e-10);
}

#[test]
fn profile_discrepancy_shrinks_with_epsilon() {
    let disc = Discretization::default();
    let mut prev = f64::INFINITY;
    for eps in [1e-3, 1e-4, 1e-5] {
        let spec = PiercedDomainSpec::centered_unit_disk(eps, None).unwrap();
        let (_, rep) = solve_fixed_point(&spec, 12.0 * PI, &disc, &FixedPointOptions::default()).unwrap();
        let d = rep.profile_discrepancy.unwrap();
        assert!(d < prev, "{d} after {prev}");
        prev = d;
    }
}
