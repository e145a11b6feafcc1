//! Batch driver: run descriptors, ε/λ sweeps, slope fits, identity checks and
//! the cross-method comparison.
//!
//! A plan writes into its output directory
//!
//! - `reports/run_NNN.json`, one per configuration (failed runs included),
//! - `aggregate.csv`, one row per configuration,
//! - `fits.csv`, one row per fitted slope,
//! - `metadata.json`, wall-clock times and thread count.
//!
//! Timings live only in `metadata.json`, so re-running a plan reproduces the
//! other files byte for byte.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble::{alpha_of_lambda, required_kappa, BubbleParams};
use crate::contraction::{solve_fixed_point, solve_prepared, FixedPointOptions, SolveReport};
use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::field::ScalarField;
use crate::fit::linear_fit;
use crate::geometry::{norm, OuterBoundary, PiercedDomainSpec, Point};
use crate::green::{disk_regular_analytic, green_function};
use crate::linearized::{error_term, sigma_p};
use crate::mesh::build_unpierced_mesh;
use crate::oracles::kernel::{default_radii, kernel_residual, KernelMode};
use crate::oracles::newton::{newton_continuation, NewtonOptions};
use crate::oracles::plane::plane_integrals;
use crate::oracles::radial::{radial_bvp, RadialOptions};
use crate::pipeline::{prepare, Discretization};

/// Outer region and hole center; the hole radius comes from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDescriptor {
    pub outer: OuterBoundary,
    #[serde(default)]
    pub hole_center: Point,
}

impl Default for DomainDescriptor {
    fn default() -> Self {
        DomainDescriptor {
            outer: OuterBoundary::unit_disk(),
            hole_center: [0.0, 0.0],
        }
    }
}

fn default_h_far() -> f64 {
    Discretization::default().h_far
}
fn default_grading() -> f64 {
    Discretization::default().grading
}
fn default_p() -> f64 {
    FixedPointOptions::default().p
}
fn default_max_iters() -> usize {
    FixedPointOptions::default().max_iterations
}
fn default_tol() -> f64 {
    FixedPointOptions::default().tolerance
}

/// One `(domain, λ, ε)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDescriptor {
    #[serde(default)]
    pub domain: DomainDescriptor,
    pub lambda_over_pi: f64,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<u32>,
    #[serde(default = "default_h_far")]
    pub h_far: f64,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// A failure of this run makes the whole plan fail.
    #[serde(default)]
    pub acceptance: bool,
}

impl RunDescriptor {
    /// Centered unit disk with default discretization.
    pub fn centered_disk(lambda_over_pi: f64, epsilon: f64, kappa: Option<u32>) -> Self {
        RunDescriptor {
            domain: DomainDescriptor::default(),
            lambda_over_pi,
            epsilon,
            kappa,
            h_far: default_h_far(),
            grading: default_grading(),
            p: default_p(),
            max_iters: default_max_iters(),
            tol: default_tol(),
            output_dir: None,
            acceptance: false,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_over_pi * PI
    }

    pub fn spec(&self) -> Result<PiercedDomainSpec> {
        PiercedDomainSpec::new(self.domain.outer.clone(), self.domain.hole_center, self.epsilon, self.kappa)
    }

    pub fn discretization(&self) -> Discretization {
        Discretization {
            h_far: self.h_far,
            grading: self.grading,
            ..Discretization::default()
        }
    }

    pub fn options(&self) -> FixedPointOptions {
        FixedPointOptions {
            max_iterations: self.max_iters,
            tolerance: self.tol,
            p: self.p,
            ..FixedPointOptions::default()
        }
    }

    /// Checks parameters without meshing.
    pub fn validate(&self) -> Result<()> {
        let lambda = self.lambda();
        alpha_of_lambda(lambda)?;
        if let Some(k) = required_kappa(lambda) {
            if self.kappa != Some(k) {
                return Err(Error::SymmetryRequired { lambda, kappa: k });
            }
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::param("p", format!("{} is not above 1", self.p)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::param("tol", "tolerance and iteration cap must be positive"));
        }
        self.spec()?;
        Ok(())
    }
}

/// Solves one configuration.
pub fn run_descriptor(desc: &RunDescriptor) -> Result<(ScalarField, SolveReport)> {
    desc.validate()?;
    solve_fixed_point(&desc.spec()?, desc.lambda(), &desc.discretization(), &desc.options())
}

/// Calibration and error-term size, known before any iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSummary {
    pub params: BubbleParams<f64>,
    pub residual_norm_p: f64,
}

/// Like [`run_descriptor`] but keeps the ansatz summary when the iteration fails.
pub fn execute_descriptor(desc: &RunDescriptor) -> (Option<AnsatzSummary>, Result<SolveReport>) {
    let setup = match desc.validate().and_then(|_| prepare(&desc.spec()?, desc.lambda(), &desc.discretization())) {
        Ok(s) => s,
        Err(e) => return (None, Err(e)),
    };
    let ansatz = error_term(&setup.space, &setup.pw, &setup.source, desc.lambda())
        .ok()
        .map(|r| AnsatzSummary {
            params: setup.params,
            residual_norm_p: setup.space.lp_norm_quad(&r, desc.p),
        });
    (ansatz, solve_prepared(&setup, &desc.options()).map(|(_, rep)| rep))
}

/// `base` repeated over every `(λ, ε)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub base: RunDescriptor,
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub lambda_over_pi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    /// Slope of `ln δ` against `ln ε`.
    DeltaLaw,
    /// Slope of `ln ‖R_ε‖_p` against `ln ε`.
    ResidualScaling,
    /// Slope of the log profile discrepancy against `ln ε`; no target.
    ProfileConvergence,
}

impl FitTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            FitTarget::DeltaLaw => "delta_law",
            FitTarget::ResidualScaling => "residual_scaling",
            FitTarget::ProfileConvergence => "profile_convergence",
        }
    }
}

fn default_fits() -> Vec<FitTarget> {
    vec![FitTarget::DeltaLaw, FitTarget::ResidualScaling, FitTarget::ProfileConvergence]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    #[serde(default)]
    pub runs: Vec<RunDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_fits")]
    pub fits: Vec<FitTarget>,
    pub output_dir: PathBuf,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Explicit runs followed by the sweep, λ outer and ε inner.
    pub fn expand(&self) -> Vec<RunDescriptor> {
        let mut out = self.runs.clone();
        if let Some(s) = &self.sweep {
            let lambdas = if s.lambda_over_pi.is_empty() {
                vec![s.base.lambda_over_pi]
            } else {
                s.lambda_over_pi.clone()
            };
            for &l in &lambdas {
                for &e in &s.epsilon {
                    let mut d = s.base.clone();
                    d.lambda_over_pi = l;
                    d.epsilon = e;
                    out.push(d);
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.sweep {
            if s.epsilon.is_empty() {
                return Err(Error::InvalidPlan("sweep has no epsilon values".into()));
            }
            if s.epsilon.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(Error::InvalidPlan("sweep epsilon list must be strictly decreasing".into()));
            }
        }
        let runs = self.expand();
        if runs.is_empty() {
            return Err(Error::InvalidPlan("plan has no runs".into()));
        }
        for (i, d) in runs.iter().enumerate() {
            d.validate().map_err(|e| Error::InvalidPlan(format!("run {i}: {e}")))?;
        }
        Ok(())
    }
}

/// Per-run report file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub descriptor: RunDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<AnsatzSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SolveReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn status(&self) -> &'static str {
        match (&self.report, &self.error) {
            (Some(r), _) if r.converged => "converged",
            (Some(_), _) => "not_converged",
            _ => "failed",
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status() == "converged"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub run: usize,
    pub lambda_over_pi: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub phi_norm: Option<f64>,
    pub residual_norm_p: Option<f64>,
    pub profile_discrepancy: Option<f64>,
    pub iterations: Option<usize>,
    pub contraction_ratio: Option<f64>,
    pub status: String,
}

impl AggregateRow {
    pub fn from_record(rec: &RunRecord) -> Self {
        let r = rec.report.as_ref();
        AggregateRow {
            run: rec.index,
            lambda_over_pi: rec.descriptor.lambda_over_pi,
            epsilon: rec.descriptor.epsilon,
            delta: rec.ansatz.map(|a| a.params.delta),
            gamma: rec.ansatz.map(|a| a.params.gamma),
            phi_norm: r.map(|r| r.phi_h1_norm),
            residual_norm_p: rec.ansatz.map(|a| a.residual_norm_p),
            profile_discrepancy: r.and_then(|r| r.profile_discrepancy),
            iterations: r.map(|r| r.iterations),
            contraction_ratio: r.and_then(|r| r.max_ratio),
            status: rec.status().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub quantity: String,
    pub fitted_slope: f64,
    pub target: Option<f64>,
    pub relative_error: Option<f64>,
    pub slope_ci95: f64,
    pub points: usize,
    pub lambda_over_pi: f64,
    pub p: f64,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

pub const AGGREGATE_HEADER: &str =
    "run,lambda_over_pi,epsilon,delta,gamma,phi_norm,residual_norm_p,profile_discrepancy,iterations,contraction_ratio,status";
pub const FIT_HEADER: &str = "quantity,fitted_slope,target,relative_error,slope_ci95,points,lambda_over_pi,p";

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from(AGGREGATE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.run,
            r.lambda_over_pi,
            r.epsilon,
            opt(&r.delta),
            opt(&r.gamma),
            opt(&r.phi_norm),
            opt(&r.residual_norm_p),
            opt(&r.profile_discrepancy),
            opt(&r.iterations),
            opt(&r.contraction_ratio),
            r.status
        );
    }
    s
}

pub fn fit_csv(rows: &[FitRow]) -> String {
    let mut s = String::from(FIT_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.quantity,
            r.fitted_slope,
            opt(&r.target),
            opt(&r.relative_error),
            r.slope_ci95,
            r.points,
            r.lambda_over_pi,
            r.p
        );
    }
    s
}

/// Slope fits per `(λ, p)` group. The δ law and the error term use every
/// run that got past calibration; the profile uses converged runs only.
pub fn fit_rows(records: &[RunRecord], targets: &[FitTarget]) -> Vec<FitRow> {
    let mut groups: BTreeMap<(u64, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.ansatz.is_some()) {
        let key = (r.descriptor.lambda_over_pi.to_bits(), r.descriptor.p.to_bits());
        groups.entry(key).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((lb, pb), mut recs) in groups {
        let (lop, p) = (f64::from_bits(lb), f64::from_bits(pb));
        recs.sort_by(|a, b| b.descriptor.epsilon.total_cmp(&a.descriptor.epsilon));
        recs.dedup_by(|a, b| a.descriptor.epsilon == b.descriptor.epsilon);
        if recs.len() < 2 {
            continue;
        }
        let Ok(alpha) = alpha_of_lambda(lop * PI) else { continue };
        let x: Vec<f64> = recs.iter().map(|r| r.descriptor.epsilon.ln()).collect();
        for &t in targets {
            let (y, target): (Vec<Option<f64>>, Option<f64>) = match t {
                FitTarget::DeltaLaw => (
                    recs.iter().map(|r| r.ansatz.map(|a| a.params.delta)).collect(),
                    Some((alpha - 2.0) / (2.0 * alpha)),
                ),
                FitTarget::ResidualScaling => (
                    recs.iter().map(|r| r.ansatz.map(|a| a.residual_norm_p)).collect(),
                    Some(sigma_p(alpha, p)),
                ),
                FitTarget::ProfileConvergence => (
                    recs.iter()
                        .map(|r| r.report.as_ref().filter(|r| r.converged).and_then(|r| r.profile_discrepancy))
                        .collect(),
                    None,
                ),
            };
            let pts: Vec<(f64, f64)> = x
                .iter()
                .zip(&y)
                .filter_map(|(&a, b)| b.filter(|v| *v > 0.0).map(|v| (a, v.ln())))
                .collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let Ok(fit) = linear_fit(&xs, &ys) else { continue };
            out.push(FitRow {
                quantity: t.as_str().to_string(),
                fitted_slope: fit.slope,
                target,
                relative_error: target.map(|g| ((fit.slope - g) / g).abs()),
                slope_ci95: fit.slope_ci95,
                points: fit.points,
                lambda_over_pi: lop,
                p,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTiming {
    pub run: usize,
    pub wall_seconds: f64,
    pub stage_seconds: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanMetadata {
    pub name: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub threads: usize,
    pub timings: Vec<RunTiming>,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub records: Vec<RunRecord>,
    pub aggregate: Vec<AggregateRow>,
    pub fits: Vec<FitRow>,
    pub output_dir: PathBuf,
}

impl PlanOutcome {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.succeeded()).count()
    }

    /// Runs flagged `acceptance` that did not converge.
    pub fn acceptance_failures(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.descriptor.acceptance && !r.succeeded())
            .count()
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn report_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("reports").join(format!("run_{index:03}.json"))
}

/// Runs every configuration in parallel and writes the artifacts.
///
/// A failing run is recorded in its report and the plan carries on.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome> {
    plan.validate()?;
    let dir = plan.output_dir.clone();
    fs::create_dir_all(dir.join("reports"))?;
    let started = unix_now();
    let runs = plan.expand();

    let results: Vec<(RunRecord, RunTiming)> = runs
        .into_par_iter()
        .enumerate()
        .map(|(index, descriptor)| {
            let t = Instant::now();
            let (ansatz, outcome) = execute_descriptor(&descriptor);
            let (report, error) = match outcome {
                Ok(mut rep) => {
                    let stages = std::mem::take(&mut rep.stage_seconds);
                    (Some((rep, stages)), None)
                }
                Err(e) => {
                    log::warn!("run {index} failed: {e}");
                    (None, Some(e.to_string()))
                }
            };
            let (report, stage_seconds) = match report {
                Some((r, s)) => (Some(r), s),
                None => (None, Vec::new()),
            };
            let timing = RunTiming {
                run: index,
                wall_seconds: t.elapsed().as_secs_f64(),
                stage_seconds,
            };
            (
                RunRecord {
                    index,
                    descriptor,
                    ansatz,
                    report,
                    error,
                },
                timing,
            )
        })
        .collect();

    let (mut records, mut timings): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    records.sort_by_key(|r| r.index);
    timings.sort_by_key(|t: &RunTiming| t.run);

    for r in &records {
        fs::write(report_path(&dir, r.index), serde_json::to_string_pretty(r)? + "\n")?;
    }
    let aggregate: Vec<AggregateRow> = records.iter().map(AggregateRow::from_record).collect();
    fs::write(dir.join("aggregate.csv"), aggregate_csv(&aggregate))?;
    let fits = fit_rows(&records, &plan.fits);
    fs::write(dir.join("fits.csv"), fit_csv(&fits))?;
    let meta = PlanMetadata {
        name: plan.name.clone(),
        started_unix: started,
        finished_unix: unix_now(),
        threads: rayon::current_num_threads(),
        timings,
    };
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;

    Ok(PlanOutcome {
        records,
        aggregate,
        fits,
        output_dir: dir,
    })
}

/// Reads every report under `dir`, sorted by run index.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir.join("reports"))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(serde_json::from_str::<RunRecord>(&fs::read_to_string(&path)?)?);
        }
    }
    out.sort_by_key(|r| r.index);
    Ok(out)
}

/// Rebuilds `aggregate.csv` from the reports and compares it with the file.
pub fn check_aggregate(dir: &Path) -> Result<()> {
    let records = load_records(dir)?;
    let rows: Vec<AggregateRow> = records.iter().map(AggregateRow::from_record).collect();
    let expected = aggregate_csv(&rows);
    let found = fs::read_to_string(dir.join("aggregate.csv"))?;
    if expected != found {
        return Err(Error::InvalidPlan("aggregate.csv does not match the run reports".into()));
    }
    Ok(())
}

/// One line of the identity suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub error: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: String, error: f64, threshold: f64) -> Self {
        IdentityCheck {
            name,
            error,
            threshold,
            passed: error.is_finite() && error < threshold,
        }
    }

    fn failed(name: String, threshold: f64) -> Self {
        IdentityCheck {
            name,
            error: f64::INFINITY,
            threshold,
            passed: false,
        }
    }
}

impl std::fmt::Display for IdentityCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: error {:.3e} (threshold {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.error,
            self.threshold
        )
    }
}

/// Whole-plane integrals against `4πα`, `0`, `−4π`.
pub fn plane_identity_checks(alphas: &[f64]) -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    for &a in alphas {
        match plane_integrals(a) {
            Ok(pi) => {
                out.push(IdentityCheck::new(format!("mass alpha={a}"), (pi.i0 - 4.0 * PI * a).abs(), 1e-8));
                out.push(IdentityCheck::new(format!("z_moment alpha={a}"), pi.i1.abs(), 1e-8));
                out.push(IdentityCheck::new(format!("log_z_moment alpha={a}"), (pi.i2 + 4.0 * PI).abs(), 1e-8));
            }
            Err(_) => {
                for n in ["mass", "z_moment", "log_z_moment"] {
                    out.push(IdentityCheck::failed(format!("{n} alpha={a}"), 1e-8));
                }
            }
        }
    }
    out
}

/// Linearized Liouville residuals of the kernel functions.
pub fn kernel_identity_checks(alphas: &[f64]) -> Vec<IdentityCheck> {
    let radii = default_radii();
    let mut out = Vec::new();
    for &a in alphas {
        let even = crate::bubble::is_even_integer(a);
        for mode in [KernelMode::Radial, KernelMode::Cosine, KernelMode::Sine] {
            if mode != KernelMode::Radial && !even {
                continue;
            }
            let name = format!("kernel {mode:?} alpha={a}");
            out.push(match kernel_residual(a, mode, &radii) {
                Ok(r) => IdentityCheck::new(name, r, 1e-6),
                Err(_) => IdentityCheck::failed(name, 1e-6),
            });
        }
    }
    out
}

/// Max nodal error of the finite-element regular part on the unit disk
/// against the closed form, over several sources, and the largest Robin
/// value error.
pub fn disk_green_errors(h: f64, sources: &[Point]) -> Result<(f64, f64)> {
    let outer = OuterBoundary::unit_disk();
    let mesh = Arc::new(build_unpierced_mesh(&outer, [0.0, 0.0], h, None)?);
    let space = FeSpace::new(mesh.clone(), 5)?;
    let mut regular: f64 = 0.0;
    let mut robin: f64 = 0.0;
    for &y in sources {
        let g = green_function(&space, y)?;
        for (x, v) in mesh.vertices().iter().zip(g.regular.values()) {
            regular = regular.max((v - disk_regular_analytic(*x, y, 1.0)).abs());
        }
        robin = robin.max((g.robin - disk_regular_analytic(y, y, 1.0)).abs());
    }
    Ok((regular, robin))
}

pub fn green_identity_checks() -> Vec<IdentityCheck> {
    let sources = [[0.0, 0.0], [0.3, 0.2], [-0.5, 0.1]];
    match disk_green_errors(0.02, &sources) {
        Ok((reg, rob)) => vec![
            IdentityCheck::new("disk regular part".into(), reg, 1e-3),
            IdentityCheck::new("disk robin".into(), rob, 1e-3),
        ],
        Err(_) => vec![
            IdentityCheck::failed("disk regular part".into(), 1e-3),
            IdentityCheck::failed("disk robin".into(), 1e-3),
        ],
    }
}

/// Plane integrals, kernel residuals and the disk Green comparison.
pub fn verify_identities() -> Vec<IdentityCheck> {
    let mut out = plane_identity_checks(&[2.5, 3.0, 4.0, 6.0]);
    out.extend(kernel_identity_checks(&[3.0, 4.0]));
    out.extend(green_identity_checks());
    out
}

/// Fixed point, radial ODE and Newton continuation on one centered disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub lambda: f64,
    pub epsilon: f64,
    pub vertices: usize,
    pub fixed_point_vs_radial: f64,
    pub newton_vs_fixed_point: f64,
    pub newton_vs_radial: f64,
    /// `4/3 · max |u_h − u_{h/2}|` at the coarse nodes.
    pub fe_error_estimate: f64,
    pub radial_peak: f64,
    pub fixed_point_peak: f64,
    pub fixed_point_iterations: usize,
    pub newton_steps: usize,
}

impl CrossCheck {
    /// Largest pairwise difference over the FE error estimate.
    pub fn worst_ratio(&self) -> f64 {
        self.fixed_point_vs_radial
            .max(self.newton_vs_fixed_point)
            .max(self.newton_vs_radial)
            / self.fe_error_estimate
    }
}

fn nodal_gap(u: &ScalarField, f: impl Fn(Point) -> Result<f64>) -> Result<f64> {
    let mut d: f64 = 0.0;
    for (x, v) in u.mesh().vertices().iter().zip(u.values()) {
        d = d.max((v - f(*x)?).abs());
    }
    Ok(d)
}

/// Runs the three solvers on the centered unit disk with hole radius
/// `epsilon`; the FE error is estimated against a mesh with `h_far` and
/// `grading` both halved.
pub fn cross_check(lambda: f64, epsilon: f64, disc: &Discretization) -> Result<CrossCheck> {
    let spec = PiercedDomainSpec::centered_unit_disk(epsilon, required_kappa(lambda))?;
    let setup = prepare(&spec, lambda, disc)?;
    let (u, rep) = solve_prepared(&setup, &FixedPointOptions::default())?;
    let fine_disc = Discretization {
        h_far: disc.h_far / 2.0,
        grading: disc.grading / 2.0,
        ..*disc
    };
    let (u_fine, _) = solve_prepared(&prepare(&spec, lambda, &fine_disc)?, &FixedPointOptions::default())?;
    let fe_error_estimate = 4.0 / 3.0 * nodal_gap(&u, |x| u_fine.eval(x))?;

    let profile = radial_bvp(lambda, epsilon, 1.0, &RadialOptions::default())?;
    let radial_at = |x: Point| profile.eval(norm(x).clamp(epsilon, 1.0));
    let newton_opts = NewtonOptions {
        symmetric: setup.params.symmetric_mode,
        ..NewtonOptions::default()
    };
    let (un, nrep) = newton_continuation(setup.space.clone(), lambda, &newton_opts)?;
    let newton_vs_fixed_point = un
        .values()
        .iter()
        .zip(u.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CrossCheck {
        lambda,
        epsilon,
        vertices: rep.vertices,
        fixed_point_vs_radial: nodal_gap(&u, radial_at)?,
        newton_vs_fixed_point,
        newton_vs_radial: nodal_gap(&un, radial_at)?,
        fe_error_estimate,
        radial_peak: profile.peak(),
        fixed_point_peak: u.max(),
        fixed_point_iterations: rep.iterations,
        newton_steps: nrep.steps.len(),
    })
}
