//! Radial solutions on the annulus `ε < r < R` by Newton's method.
//!
//! In `t = ln r` the problem reads `u'' + λ e^{u+2t}/M = 0`,
//! `M = 2π ∫ e^{u+2t} dt`, `u(ln ε) = u(ln R) = 0`. Numerov's scheme on a
//! uniform `t` grid with Simpson's rule for `M` gives a tridiagonal Jacobian
//! plus a rank-one term, solved by Sherman–Morrison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub epsilon: f64,
    pub r_out: f64,
    pub lambda: f64,
    /// Uniform grid in `ln r`.
    pub log_radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `2π ∫ e^u r dr`.
    pub mass: f64,
    pub newton_iterations: usize,
}

impl RadialProfile {
    pub fn radii(&self) -> Vec<f64> {
        self.log_radii.iter().map(|t| t.exp()).collect()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cubic Lagrange interpolation in `ln r`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let t = r.ln();
        let (t0, t1) = (self.log_radii[0], *self.log_radii.last().unwrap());
        if !(t >= t0 - 1e-12 && t <= t1 + 1e-12) {
            return Err(Error::PointOutside(r, 0.0));
        }
        let n = self.log_radii.len();
        let h = (t1 - t0) / (n - 1) as f64;
        let i = (((t - t0) / h).floor() as usize).clamp(1, n - 3);
        let s = (t - self.log_radii[i]) / h;
        let v = |k: usize| self.values[k];
        Ok(v(i - 1) * (-s * (s - 1.0) * (s - 2.0) / 6.0)
            + v(i) * ((s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0)
            + v(i + 1) * (-(s + 1.0) * s * (s - 2.0) / 2.0)
            + v(i + 2) * ((s + 1.0) * s * (s - 1.0) / 6.0))
    }

    /// `2π∫λe^u r dr / M`, one by construction.
    pub fn normalization(&self) -> f64 {
        let h = self.step();
        let e: Vec<f64> = self
            .values
            .iter()
            .zip(&self.log_radii)
            .map(|(u, t)| (u + 2.0 * t).exp())
            .collect();
        std::f64::consts::TAU * simpson(&e, h) / self.mass
    }

    fn step(&self) -> f64 {
        (self.log_radii.last().unwrap() - self.log_radii[0]) / (self.log_radii.len() - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadialOptions {
    /// Number of grid intervals (rounded up to even).
    pub intervals: usize,
    pub lambda_start: f64,
    pub max_lambda_step: f64,
    pub min_lambda_step: f64,
    pub tolerance: f64,
    pub max_newton: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        RadialOptions {
            intervals: 8000,
            lambda_start: pi,
            max_lambda_step: pi,
            min_lambda_step: pi / 64.0,
            tolerance: 1e-12,
            max_newton: 30,
        }
    }
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    let mut s = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    s * h / 3.0
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Thomas algorithm for a tridiagonal system (sub, diag, sup).
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut m = diag[0];
    if m == 0.0 {
        return Err(Error::SingularSystem("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / m;
    d[0] = rhs[0] / m;
    for i in 1..n {
        m = diag[i] - sub[i] * c[i - 1];
        if m == 0.0 {
            return Err(Error::SingularSystem("zero pivot in tridiagonal solve".into()));
        }
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

struct Grid {
    t: Vec<f64>,
    h: f64,
    w: Vec<f64>,
}

/// Newton's method at fixed λ from `u` (full grid including the zero ends).
fn newton(grid: &Grid, lambda: f64, u: &mut [f64], opts: &RadialOptions) -> Result<usize> {
    let n = grid.t.len() - 1;
    let h2 = grid.h * grid.h;
    let tau = std::f64::consts::TAU;
    for it in 0..opts.max_newton {
        let e: Vec<f64> = u.iter().zip(&grid.t).map(|(u, t)| (u + 2.0 * t).exp()).collect();
        let mass = tau * e.iter().zip(&grid.w).map(|(e, w)| e * w).sum::<f64>();
        let c = h2 * lambda / (12.0 * mass);
        let m = n - 1;
        let mut f = vec![0.0; m];
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut p = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            let s = e[i - 1] + 10.0 * e[i] + e[i + 1];
            f[k] = u[i + 1] - 2.0 * u[i] + u[i - 1] + c * s;
            diag[k] = -2.0 + 10.0 * c * e[i];
            sub[k] = 1.0 + c * e[i - 1];
            sup[k] = 1.0 + c * e[i + 1];
            p[k] = c * s / mass;
        }
        let q: Vec<f64> = (1..n).map(|i| tau * grid.w[i] * e[i]).collect();
        let scale = 1.0 + u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let fnorm = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !fnorm.is_finite() {
            return Err(Error::NonFinite("radial residual".into()));
        }
        // J = T − p qᵀ
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let y = thomas(&sub, &diag, &sup, &neg_f)?;
        let z = thomas(&sub, &diag, &sup, &p)?;
        let qy: f64 = q.iter().zip(&y).map(|(a, b)| a * b).sum();
        let qz: f64 = q.iter().zip(&z).map(|(a, b)| a * b).sum();
        let den = 1.0 - qz;
        if den.abs() < 1e-14 {
            return Err(Error::DegenerateRankOne { denominator: den, lambda });
        }
        let mut dmax: f64 = 0.0;
        for k in 0..m {
            let d = y[k] + z[k] * qy / den;
            u[k + 1] += d;
            dmax = dmax.max(d.abs());
        }
        if dmax <= opts.tolerance * scale {
            return Ok(it + 1);
        }
    }
    Err(Error::ContinuationFailed {
        last_lambda: f64::NAN,
        failed_lambda: lambda,
    })
}

/// Radial branch continued in λ from `opts.lambda_start` with `u = 0`.
pub fn radial_bvp(lambda: f64, epsilon: f64, r_out: f64, opts: &RadialOptions) -> Result<RadialProfile> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    if !(epsilon > 0.0 && epsilon < r_out) {
        return Err(Error::param("epsilon", "need 0 < epsilon < r_out"));
    }
    let n = opts.intervals.max(4).div_ceil(2) * 2;
    let (t0, t1) = (epsilon.ln(), r_out.ln());
    let h = (t1 - t0) / n as f64;
    let t: Vec<f64> = (0..=n).map(|i| if i == n { t1 } else { t0 + h * i as f64 }).collect();
    let grid = Grid {
        w: simpson_weights(n, h),
        t,
        h,
    };
    let mut u = vec![0.0; n + 1];
    let mut lam = opts.lambda_start.min(lambda);
    let mut iterations = newton(&grid, lam, &mut u, opts)?;
    let mut step = opts.max_lambda_step;
    let mut prev: Option<(f64, Vec<f64>)> = None;
    while lam < lambda {
        let next = (lam + step).min(lambda);
        // Secant predictor from the last two accepted points.
        let mut trial = u.clone();
        if let Some((lp, up)) = &prev {
            let s = (next - lam) / (lam - lp);
            for i in 0..trial.len() {
                trial[i] += s * (u[i] - up[i]);
            }
        }
        match newton(&grid, next, &mut trial, opts) {
            Ok(it) => {
                iterations = it;
                prev = Some((lam, std::mem::replace(&mut u, trial)));
                lam = next;
                step = (step * 1.5).min(opts.max_lambda_step);
            }
            Err(_) if step / 2.0 >= opts.min_lambda_step => step /= 2.0,
            Err(_) => {
                return Err(Error::ContinuationFailed {
                    last_lambda: lam,
                    failed_lambda: next,
                })
            }
        }
    }
    let e: Vec<f64> = u.iter().zip(&grid.t).map(|(u, t)| (u + 2.0 * t).exp()).collect();
    let mass = std::f64::consts::TAU * simpson(&e, h);
    Ok(RadialProfile {
        epsilon,
        r_out,
        lambda,
        log_radii: grid.t,
        values: u,
        mass,
        newton_iterations: iterations,
    })
}
