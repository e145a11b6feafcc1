use std::f64::consts::PI;

use meanfield_core::contraction::{solve_prepared, FixedPointOptions};
use meanfield_core::geometry::PiercedDomainSpec;
use meanfield_core::oracles::kernel::{default_radii, kernel_residual, symmetry_defect, KernelMode};
use meanfield_core::oracles::newton::{newton_continuation, NewtonOptions};
use meanfield_core::oracles::plane::{plane_integrals, z_weighted_norm};
use meanfield_core::oracles::radial::{radial_bvp, RadialOptions};
use meanfield_core::pipeline::{prepare, Discretization};

#[test]
fn plane_identities_in_single_and_double_precision() {
    for alpha in [2.5f64, 3.0, 4.0, 6.0] {
        let p = plane_integrals(alpha).unwrap();
        assert!((p.i0 - 4.0 * PI * alpha).abs() < 1e-8);
        assert!(p.i1.abs() < 1e-8);
        assert!((p.i2 + 4.0 * PI).abs() < 1e-8);
        let z = z_weighted_norm(alpha, 1e-12).unwrap();
        assert!((z - (2.0 * PI / (3.0 * alpha)).sqrt()).abs() < 1e-8);
    }
    let p = plane_integrals(3.0f32).unwrap();
    assert!((p.i0 - 12.0 * std::f32::consts::PI).abs() < 1e-3);
}

#[test]
fn kernel_functions_and_symmetry_membership() {
    let radii = default_radii();
    for alpha in [2.5, 3.0, 5.0] {
        assert!(kernel_residual(alpha, KernelMode::Radial, &radii).unwrap() < 1e-6);
        assert!(symmetry_defect(alpha, KernelMode::Radial, &radii) < 1e-12);
    }
    for alpha in [4.0, 6.0, 8.0] {
        for mode in [KernelMode::Cosine, KernelMode::Sine] {
            assert!(kernel_residual(alpha, mode, &radii).unwrap() < 1e-6);
            assert!(symmetry_defect(alpha, mode, &radii) > 0.1);
        }
    }
}

#[test]
fn radial_profile_vanishes_on_both_circles_and_is_unimodal() {
    let prof = radial_bvp(12.0 * PI, 1e-4, 1.0, &RadialOptions::default()).unwrap();
    assert!(prof.eval(1e-4).unwrap().abs() < 1e-10);
    assert!(prof.eval(1.0).unwrap().abs() < 1e-10);
    assert!((prof.peak() - 6.945).abs() < 1e-3);
    assert!((prof.normalization() - 1.0).abs() < 1e-12);
    let samples: Vec<f64> = (0..=80).map(|k| prof.eval(1e-4 * 1e4f64.powf(k as f64 / 80.0)).unwrap()).collect();
    let top = samples.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(top > 0 && top < 80);
    assert!(samples[..=top].windows(2).all(|w| w[1] > w[0]));
    assert!(samples[top..].windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn newton_and_fixed_point_find_the_same_solution() {
    let lambda = 12.0 * PI;
    let spec = PiercedDomainSpec::centered_unit_disk(1e-3, None).unwrap();
    let disc = Discretization {
        h_far: 0.08,
        grading: 0.15,
        ..Discretization::default()
    };
    let setup = prepare(&spec, lambda, &disc).unwrap();
    let (u, _) = solve_prepared(&setup, &FixedPointOptions::default()).unwrap();
    let (un, rep) = newton_continuation(setup.space.clone(), lambda, &NewtonOptions::default()).unwrap();
    assert!((rep.steps.last().unwrap().lambda - lambda).abs() < 1e-12);
    let d = u.values().iter().zip(un.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-7, "{d}");
}
