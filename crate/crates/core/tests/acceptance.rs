//! One PASS/FAIL line per acceptance criterion.
//!
//! Runs without the libtest harness so the lines land in the test log.
//! Criteria listed in `KNOWN_RED` are reported as FAIL but only their
//! `required` parts fail the binary; the README explains each one.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use meanfield_core::bubble::{gamma_coeff, solve_delta, BubbleParams};
use meanfield_core::contraction::{solve_fixed_point, FixedPointOptions};
use meanfield_core::error::Error;
use meanfield_core::experiment::{cross_check, disk_green_errors, kernel_identity_checks, plane_identity_checks};
use meanfield_core::fit::linear_fit;
use meanfield_core::geometry::{OuterBoundary, PiercedDomainSpec};
use meanfield_core::linalg::max_abs;
use meanfield_core::linearized::{error_term, residual_scaling_study, sigma_p, LinearizedSystem};
use meanfield_core::oracles::kernel::{default_radii, symmetry_defect, KernelMode};
use meanfield_core::pipeline::{prepare, Discretization};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose failure is a documented finding rather than a defect.
const KNOWN_RED: &[u32] = &[6];

struct Outcome {
    passed: bool,
    /// Parts that must hold even for a known-red criterion.
    required: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome {
        passed,
        required: passed,
        detail,
    }
}

fn budget(passed: bool, start: Instant, limit: f64) -> (bool, f64) {
    let t = start.elapsed().as_secs_f64();
    (passed && t < limit, t)
}

fn plane_identities() -> Outcome {
    let t = Instant::now();
    let checks = plane_identity_checks(&[2.5, 3.0, 4.0, 6.0]);
    let worst = checks.iter().map(|c| c.error).fold(0.0, f64::max);
    let (ok, secs) = budget(checks.iter().all(|c| c.passed), t, 5.0);
    outcome(ok, format!("{} identities, worst error {worst:.2e} < 1e-8, {secs:.2} s < 5 s", checks.len()))
}

fn calibration() -> Outcome {
    let t = Instant::now();
    let mut gamma_err: f64 = 0.0;
    let mut slope_err: f64 = 0.0;
    let eps: Vec<f64> = (0..7).map(|k| 1e-3 * 10f64.powf(-0.5 * k as f64)).collect();
    for alpha in [2.5, 3.0, 4.0, 6.0] {
        for robin in [0.0, -0.1] {
            let mut y = Vec::new();
            for &e in &eps {
                let d = solve_delta(alpha, e, robin).unwrap();
                gamma_err = gamma_err.max((gamma_coeff(alpha, d, e, robin).unwrap() - 2.0 * PI * (alpha - 2.0)).abs());
                y.push(d.ln());
            }
            let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
            let target = (alpha - 2.0) / (2.0 * alpha);
            slope_err = slope_err.max((linear_fit(&x, &y).unwrap().slope - target).abs() / target);
        }
    }
    let (ok, secs) = budget(gamma_err < 1e-9 && slope_err < 0.02, t, 1.0);
    outcome(
        ok,
        format!("gamma error {gamma_err:.2e} < 1e-9, delta slope relative error {slope_err:.2e} < 2%, {secs:.2} s < 1 s"),
    )
}

fn green_oracle() -> Outcome {
    let t = Instant::now();
    let (regular, _) = disk_green_errors(0.02, &[[0.0, 0.0], [0.3, 0.2], [-0.5, 0.1]]).unwrap();
    let (_, center_robin) = disk_green_errors(0.02, &[[0.0, 0.0]]).unwrap();
    let (ok, secs) = budget(regular < 1e-3 && center_robin < 1e-3, t, 30.0);
    outcome(
        ok,
        format!("regular part error {regular:.2e} < 1e-3, |H(0,0)| = {center_robin:.2e} < 1e-3, {secs:.2} s < 30 s"),
    )
}

fn residual_scaling() -> Outcome {
    let t = Instant::now();
    let spec = PiercedDomainSpec::new(OuterBoundary::unit_disk(), [0.3, 0.0], 1e-3, None).unwrap();
    let eps = [1e-3, 1e-4, 1e-5, 1e-6];
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, p) in [(3.0, 1.1), (4.0, 1.2)] {
        let study = residual_scaling_study(&spec, 4.0 * PI * alpha, p, &eps, &Discretization::default()).unwrap();
        let rel = study.relative_error();
        ok &= rel < 0.25;
        parts.push(format!(
            "(alpha {alpha}, p {p}): slope {:.4} vs {:.4}, rel err {rel:.3}",
            study.fit.slope, study.sigma_p
        ));
    }
    let (ok, secs) = budget(ok, t, 600.0);
    outcome(ok, format!("hole at (0.3, 0), eps 1e-3..1e-6; {}; {secs:.1} s", parts.join("; ")))
}

fn linear_theory() -> Outcome {
    let t = Instant::now();
    let lambda = 12.0 * PI;

    // Rank-one solve against a dense LU of the full operator.
    let coarse = Discretization {
        h_far: 0.1,
        grading: 0.25,
        resolve_concentration: false,
        ..Discretization::default()
    };
    let spec = PiercedDomainSpec::centered_unit_disk(2e-2, None).unwrap();
    let setup = prepare(&spec, lambda, &coarse).unwrap();
    let sys = LinearizedSystem::assemble(setup.space.clone(), &setup.pw, lambda, false).unwrap();
    let n = sys.space().n_free();
    let b = sys.coupling();
    let mut dense = DMatrix::zeros(n, n);
    for (i, j, v) in sys.local_matrix().triplets() {
        dense[(i, j)] += v;
    }
    for i in 0..n {
        for j in 0..n {
            dense[(i, j)] += b[i] * b[j] / lambda;
        }
    }
    let lu = dense.lu();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut dense_gap: f64 = 0.0;
    for _ in 0..3 {
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (phi, _) = sys.solve_load(&rhs).unwrap();
        let reference = lu.solve(&DVector::from_vec(rhs)).unwrap();
        let scale = max_abs(reference.as_slice()).max(1.0);
        let gap = phi.iter().zip(reference.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        dense_gap = dense_gap.max(gap / scale);
    }

    // Stability ratio over the ε sweep, worst of three right-hand sides.
    let eps = [1e-3, 1e-4, 1e-5, 1e-6];
    let mut exponents = Vec::new();
    for (lop, kappa) in [(12.0, None), (16.0, Some(2))] {
        let lambda = lop * PI;
        let mut ratios = Vec::new();
        for &e in &eps {
            let spec = PiercedDomainSpec::centered_unit_disk(e, kappa).unwrap();
            let setup = prepare(&spec, lambda, &Discretization::default()).unwrap();
            let sp = &setup.space;
            let sys = LinearizedSystem::assemble(sp.clone(), &setup.pw, lambda, kappa.is_some()).unwrap();
            let (d, a) = (setup.params.delta, setup.params.alpha);
            let r = error_term(sp, &setup.pw, &setup.source, lambda).unwrap();
            let z = sp.quad_from_fn(|x| {
                let ra = (x[0] * x[0] + x[1] * x[1]).sqrt().powf(a);
                (d.powf(a) - ra) / (d.powf(a) + ra)
            });
            let kz = sys.weight().zip_map(&z, |k, z| k * z);
            let one = sp.quad_from_fn(|_| 1.0);
            let mut worst: f64 = 0.0;
            for psi in [&r, &kz, &one] {
                let (phi, _) = sys.solve_quad(psi).unwrap();
                worst = worst.max(sp.h1_seminorm(phi.values()) / sp.lp_norm_quad(psi, 1.2));
            }
            ratios.push(worst);
        }
        let x: Vec<f64> = eps.iter().map(|e: &f64| e.ln().abs().ln()).collect();
        let y: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
        exponents.push((lop, linear_fit(&x, &y).unwrap().slope));
    }
    let growth = exponents.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let (ok, secs) = budget(n <= 3000 && dense_gap < 1e-9 && growth <= 1.3, t, 600.0);
    outcome(
        ok,
        format!(
            "dense gap {dense_gap:.2e} < 1e-9 on {n} <= 3000 unknowns; |ln eps| growth exponents {} <= 1.3; {secs:.1} s",
            exponents
                .iter()
                .map(|(l, s)| format!("{l}pi: {s:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn contraction() -> Outcome {
    let lambda = 12.0 * PI;
    let opts = FixedPointOptions::default();
    let eps = [1e-4, 1e-5, 1e-6];
    let mut hard = true;
    let mut rows = Vec::new();
    let mut slowest: f64 = 0.0;
    let mut y = Vec::new();
    for &e in &eps {
        let t = Instant::now();
        let spec = PiercedDomainSpec::centered_unit_disk(e, None).unwrap();
        let (_, rep) = solve_fixed_point(&spec, lambda, &Discretization::default(), &opts).unwrap();
        let ratio = rep.max_ratio.unwrap_or(f64::NAN);
        hard &= rep.converged && ratio < 1.0 && rep.fixed_point_defect <= 1e-9;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        rows.push(format!(
            "eps {e:.0e}: ratio {ratio:.3}, defect {:.1e}",
            rep.fixed_point_defect
        ));
        y.push((rep.phi_h1_norm / e.ln().abs()).ln());
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let slope = linear_fit(&x, &y).unwrap().slope;
    let target = sigma_p(3.0, opts.p);
    let rel = (slope - target).abs() / target;
    let ok = hard && rel < 0.30 && slowest < 900.0;
    Outcome {
        passed: ok,
        required: hard && slowest < 900.0,
        detail: format!(
            "{}; convergence {}; ln(|phi|/|ln eps|) slope {slope:.3} vs sigma_p {target:.3} (rel err {rel:.2}, need < 0.30)",
            rows.join("; "),
            if hard { "ok" } else { "FAILED" }
        ),
    }
}

fn profile() -> Outcome {
    let opts = FixedPointOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (lop, kappa) in [(12.0, None), (16.0, Some(2))] {
        let mut d = Vec::new();
        for e in [1e-3, 1e-4, 1e-5] {
            let spec = PiercedDomainSpec::centered_unit_disk(e, kappa).unwrap();
            let (_, rep) = solve_fixed_point(&spec, lop * PI, &Discretization::default(), &opts).unwrap();
            d.push(rep.profile_discrepancy.unwrap());
        }
        ok &= d.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("{lop}pi: {:.2e} > {:.2e} > {:.2e}", d[0], d[1], d[2]));
    }
    let mut coeff_gap: f64 = 0.0;
    for k in 9..=40 {
        let p = BubbleParams::calibrate(k as f64 * PI, 1e-4, [0.0, 0.0], 0.0).unwrap();
        let expected = 2.0 * PI * (p.alpha + 2.0);
        coeff_gap = coeff_gap.max((p.profile_coefficient() - expected).abs() / expected);
    }
    ok &= coeff_gap <= 4.0 * f64::EPSILON;
    outcome(ok, format!("{}; coefficient identity gap {coeff_gap:.1e} (rounding only)", parts.join("; ")))
}

fn cross_method() -> Outcome {
    let t = Instant::now();
    let cc = cross_check(12.0 * PI, 1e-4, &Discretization::default()).unwrap();
    let (ok, secs) = budget(cc.worst_ratio() <= 3.0, t, 1200.0);
    outcome(
        ok,
        format!(
            "fixed point vs radial {:.2e}, newton vs fixed point {:.2e}, newton vs radial {:.2e}; FE error estimate {:.2e}; worst ratio {:.2} <= 3; {secs:.1} s",
            cc.fixed_point_vs_radial, cc.newton_vs_fixed_point, cc.newton_vs_radial, cc.fe_error_estimate, cc.worst_ratio()
        ),
    )
}

fn symmetry() -> Outcome {
    let disc = Discretization::default();
    let opts = FixedPointOptions::default();
    let plain = PiercedDomainSpec::centered_unit_disk(1e-3, None).unwrap();
    let refused = matches!(
        solve_fixed_point(&plain, 16.0 * PI, &disc, &opts),
        Err(Error::SymmetryRequired { kappa: 2, .. })
    );
    let spec = PiercedDomainSpec::centered_unit_disk(1e-3, Some(2)).unwrap();
    let (u, rep) = solve_fixed_point(&spec, 16.0 * PI, &disc, &opts).unwrap();
    let perm = &u.mesh().symmetry().unwrap().perm;
    let v = u.values();
    let defect = (0..v.len()).map(|i| (v[perm[i]] - v[i]).abs()).fold(0.0, f64::max);
    outcome(
        refused && rep.converged && defect < 1e-10,
        format!("no-kappa run refused: {refused}; kappa = 2 nodal defect {defect:.1e} < 1e-10"),
    )
}

fn kernel() -> Outcome {
    let checks = kernel_identity_checks(&[2.5, 3.0, 4.0, 5.0, 6.0, 8.0]);
    let worst = checks.iter().map(|c| c.error).fold(0.0, f64::max);
    let radii = default_radii();
    let mut radial_defect: f64 = 0.0;
    let mut angular_defect = f64::INFINITY;
    for alpha in [2.5, 3.0, 4.0, 5.0, 6.0, 8.0] {
        radial_defect = radial_defect.max(symmetry_defect(alpha, KernelMode::Radial, &radii));
    }
    for alpha in [4.0, 6.0, 8.0] {
        for mode in [KernelMode::Cosine, KernelMode::Sine] {
            angular_defect = angular_defect.min(symmetry_defect(alpha, mode, &radii));
        }
    }
    let ok = checks.iter().all(|c| c.passed) && angular_defect > 1e-3 && radial_defect < 1e-12;
    outcome(
        ok,
        format!(
            "{} residuals, worst {worst:.2e} < 1e-6; angular modes break the rotation by {angular_defect:.2e}, radial mode by {radial_defect:.1e}",
            checks.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "whole-plane identities", plane_identities),
        (2, "calibration", calibration),
        (3, "disk Green function", green_oracle),
        (4, "error-term scaling", residual_scaling),
        (5, "linearized operator", linear_theory),
        (6, "Picard contraction", contraction),
        (7, "profile convergence", profile),
        (8, "cross-method agreement", cross_method),
        (9, "symmetry enforcement", symmetry),
        (10, "plane kernel", kernel),
    ];
    let mut hard_failures = 0;
    for (id, name, f) in criteria {
        let o = f();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let note = if !o.passed && KNOWN_RED.contains(&id) {
            " [known, documented in README]"
        } else {
            ""
        };
        println!("criterion {id:>2} {tag} {name}: {}{note}", o.detail);
        if !o.required || (!o.passed && !KNOWN_RED.contains(&id)) {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
