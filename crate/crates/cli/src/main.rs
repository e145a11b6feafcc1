use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use meanfield_core::experiment::{
    aggregate_csv, cross_check, run_descriptor, run_plan, verify_identities, AggregateRow, AnsatzSummary,
    ExperimentPlan, RunDescriptor, RunRecord,
};
use meanfield_core::mesh_io::save_mesh;
use meanfield_core::oracles::OracleRecord;

#[derive(Parser)]
#[command(name = "meanfield", version, about = "Blow-up solutions of the mean field equation on pierced domains")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration.
    Solve(SolveArgs),
    /// Run every configuration of a plan file.
    Sweep(SweepArgs),
    /// Run the identity suite.
    Verify,
    /// Compare the fixed point with the radial and Newton solvers on the centered disk.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    lambda_over_pi: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    kappa: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    h_far: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Run descriptor (JSON). Flags override its fields.
    descriptor: Option<PathBuf>,
    #[command(flatten)]
    flags: RunFlags,
}

#[derive(Args)]
struct SweepArgs {
    /// Plan file (JSON).
    plan: PathBuf,
    /// Overrides the plan's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    flags: RunFlags,
    #[arg(long, default_value_t = 0.1)]
    grading: f64,
}

fn descriptor_from(path: Option<&Path>, f: &RunFlags) -> anyhow::Result<RunDescriptor> {
    let mut d = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => {
            let (Some(l), Some(e)) = (f.lambda_over_pi, f.epsilon) else {
                bail!("give a descriptor file or both --lambda-over-pi and --epsilon");
            };
            RunDescriptor::centered_disk(l, e, None)
        }
    };
    if let Some(v) = f.lambda_over_pi {
        d.lambda_over_pi = v;
    }
    if let Some(v) = f.epsilon {
        d.epsilon = v;
    }
    if f.kappa.is_some() {
        d.kappa = f.kappa;
    }
    if let Some(v) = f.p {
        d.p = v;
    }
    if let Some(v) = f.h_far {
        d.h_far = v;
    }
    if f.out.is_some() {
        d.output_dir = f.out.clone();
    }
    Ok(d)
}

fn solve(args: &SolveArgs) -> anyhow::Result<bool> {
    let desc = descriptor_from(args.descriptor.as_deref(), &args.flags)?;
    let out = desc.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let (u, mut report) = run_descriptor(&desc)?;
    let stages = std::mem::take(&mut report.stage_seconds);
    let converged = report.converged;
    let ansatz = AnsatzSummary {
        params: report.params,
        residual_norm_p: report.residual_norm_p,
    };
    let record = RunRecord {
        index: 0,
        descriptor: desc,
        ansatz: Some(ansatz),
        report: Some(report),
        error: None,
    };
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&record)? + "\n")?;
    fs::write(out.join("summary.csv"), aggregate_csv(&[AggregateRow::from_record(&record)]))?;
    fs::write(out.join("metadata.json"), serde_json::to_string_pretty(&json!({ "stage_seconds": stages }))? + "\n")?;
    save_mesh(out.join("solution.mesh"), u.mesh(), &[("u", u.values())])?;
    let r = record.report.as_ref().unwrap();
    println!(
        "{} after {} iterations: |phi|_H1 = {:.4e}, |R|_p = {:.4e}, profile discrepancy = {}",
        if converged { "converged" } else { "not converged" },
        r.iterations,
        r.phi_h1_norm,
        r.residual_norm_p,
        r.profile_discrepancy.map_or("n/a".to_string(), |v| format!("{v:.4e}"))
    );
    Ok(converged)
}

fn sweep(args: &SweepArgs) -> anyhow::Result<bool> {
    let mut plan = ExperimentPlan::load(&args.plan).with_context(|| format!("loading {}", args.plan.display()))?;
    if let Some(o) = &args.out {
        plan.output_dir = o.clone();
    }
    let outcome = run_plan(&plan)?;
    println!(
        "{} runs, {} failed, artifacts in {}",
        outcome.records.len(),
        outcome.failures(),
        outcome.output_dir.display()
    );
    for f in &outcome.fits {
        println!(
            "{} (lambda/pi = {}): slope {:.4} target {}",
            f.quantity,
            f.lambda_over_pi,
            f.fitted_slope,
            f.target.map_or("-".to_string(), |t| format!("{t:.4}"))
        );
    }
    Ok(outcome.acceptance_failures() == 0)
}

fn verify() -> bool {
    let checks = verify_identities();
    for c in &checks {
        println!("{c}");
    }
    checks.iter().all(|c| c.passed)
}

fn oracle(args: &OracleArgs) -> anyhow::Result<bool> {
    let f = &args.flags;
    let lop = f.lambda_over_pi.unwrap_or(12.0);
    let eps = f.epsilon.unwrap_or(1e-4);
    let mut disc = meanfield_core::Discretization {
        grading: args.grading,
        ..Default::default()
    };
    if let Some(h) = f.h_far {
        disc.h_far = h;
    }
    let cc = cross_check(lop * std::f64::consts::PI, eps, &disc)?;
    let record = OracleRecord {
        op: "cross_check".into(),
        inputs: json!({ "lambda_over_pi": lop, "epsilon": eps, "h_far": disc.h_far, "grading": disc.grading }),
        outputs: serde_json::to_value(&cc)?,
        error_estimate: cc.fe_error_estimate,
    };
    let text = serde_json::to_string_pretty(&record)? + "\n";
    match &f.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("oracle.json"), &text)?;
        }
        None => print!("{text}"),
    }
    let ok = cc.worst_ratio() <= 3.0;
    eprintln!(
        "{}: largest pairwise gap is {:.2} x the FE error estimate {:.3e}",
        if ok { "PASS" } else { "FAIL" },
        cc.worst_ratio(),
        cc.fe_error_estimate
    );
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify => Ok(verify()),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
