//! Newton's method on the weak form of `−Δu = λe^u/∫e^u`, continued in λ.
//! The Jacobian at `u` is the nonlocal operator `L` with weight `λe^u/∫e^u`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contraction::{weak_residual, weak_residual_vector};
use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::field::ScalarField;
use crate::linalg::max_abs;
use crate::linearized::LinearizedSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    pub lambda_start: f64,
    pub max_lambda_step: f64,
    pub min_lambda_step: f64,
    /// Accept when the weak residual is below `tolerance · λ`.
    pub tolerance: f64,
    pub max_newton: usize,
    pub symmetric: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        NewtonOptions {
            lambda_start: 4.0 * pi,
            max_lambda_step: pi,
            min_lambda_step: pi / 64.0,
            tolerance: 1e-9,
            max_newton: 20,
            symmetric: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub lambda: f64,
    pub newton_iterations: usize,
    pub weak_residual: f64,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub steps: Vec<ContinuationStep>,
}

fn newton_at(space: &Arc<FeSpace>, lambda: f64, u: &mut [f64], opts: &NewtonOptions) -> Result<(usize, f64)> {
    for it in 0..opts.max_newton {
        let res = weak_residual(space, u, lambda)?;
        if res < opts.tolerance * lambda {
            return Ok((it, res));
        }
        let field = ScalarField::new(space.mesh().clone(), u.to_vec())?;
        let sys = LinearizedSystem::assemble(space.clone(), &field, lambda, opts.symmetric)?;
        let f = weak_residual_vector(space, u, lambda)?;
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let (du, _) = sys.solve_load(&neg)?;
        if !du.iter().all(|v| v.is_finite()) || max_abs(&du) > 50.0 {
            return Err(Error::NonFinite("Newton step blew up".into()));
        }
        for (k, &i) in space.free_nodes().iter().enumerate() {
            u[i] += du[k];
        }
    }
    let res = weak_residual(space, u, lambda)?;
    if res < opts.tolerance * lambda {
        Ok((opts.max_newton, res))
    } else {
        Err(Error::NonFinite(format!("Newton stalled at residual {res:.3e}")))
    }
}

/// Continues from `u = 0` at `opts.lambda_start` up to `lambda_target`.
pub fn newton_continuation(
    space: Arc<FeSpace>,
    lambda_target: f64,
    opts: &NewtonOptions,
) -> Result<(ScalarField, NewtonReport)> {
    if opts.symmetric && space.mesh().symmetry().is_none() {
        return Err(Error::MissingSymmetry);
    }
    let mut u = vec![0.0; space.n_nodes()];
    let mut lam = opts.lambda_start.min(lambda_target);
    let mut steps = Vec::new();
    let (it, res) = newton_at(&space, lam, &mut u, opts).map_err(|_| Error::ContinuationFailed {
        last_lambda: f64::NAN,
        failed_lambda: lam,
    })?;
    steps.push(ContinuationStep {
        lambda: lam,
        newton_iterations: it,
        weak_residual: res,
        peak: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    });
    let mut step = opts.max_lambda_step;
    let mut prev: Option<(f64, Vec<f64>)> = None;
    while lam < lambda_target {
        let next = (lam + step).min(lambda_target);
        let mut trial = u.clone();
        if let Some((lp, up)) = &prev {
            let s = (next - lam) / (lam - lp);
            for i in 0..trial.len() {
                trial[i] += s * (u[i] - up[i]);
            }
        }
        match newton_at(&space, next, &mut trial, opts) {
            Ok((it, res)) => {
                if opts.symmetric {
                    space.symmetrize(&mut trial)?;
                }
                prev = Some((lam, std::mem::replace(&mut u, trial)));
                lam = next;
                steps.push(ContinuationStep {
                    lambda: lam,
                    newton_iterations: it,
                    weak_residual: res,
                    peak: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                });
                step = (step * 1.5).min(opts.max_lambda_step);
            }
            Err(e) if step / 2.0 >= opts.min_lambda_step => {
                log::debug!("Newton failed at lambda = {next}: {e}; halving step");
                step /= 2.0;
            }
            Err(_) => {
                return Err(Error::ContinuationFailed {
                    last_lambda: lam,
                    failed_lambda: next,
                })
            }
        }
    }
    Ok((ScalarField::new(space.mesh().clone(), u)?, NewtonReport { steps }))
}
