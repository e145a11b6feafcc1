//! Dirichlet Green function of the unpierced domain,
//! `G(x, y) = (1/2π) ln(1/|x − y|) + H(x, y)`, with `H` harmonic in `x`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundaryData, FeSpace};
use crate::field::ScalarField;
use crate::geometry::{dist, OuterBoundary, Point};
use crate::mesh::BoundaryTag;
use crate::scalar::{two_pi, Scalar};

/// `(1/2π) ln(1/|x − y|)`.
pub fn singular_part<T: Scalar>(x: [T; 2], y: [T; 2]) -> T {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    -(dx * dx + dy * dy).ln() / (T::lit(2.0) * two_pi::<T>())
}

/// Regular part for the disk of radius `r` centered at the origin,
/// written so that `y = 0` needs no special case:
/// `H = (1/2π) ln( sqrt(|x|²|y|² − 2R² x·y + R⁴) / R )`.
pub fn disk_regular_analytic<T: Scalar>(x: [T; 2], y: [T; 2], r: T) -> T {
    let xx = x[0] * x[0] + x[1] * x[1];
    let yy = y[0] * y[0] + y[1] * y[1];
    let xy = x[0] * y[0] + x[1] * y[1];
    let r2 = r * r;
    let q = xx * yy - T::lit(2.0) * r2 * xy + r2 * r2;
    (q.ln() * T::lit(0.5) - r.ln()) / two_pi::<T>()
}

/// Closed-form Green function of the disk `|x| < r`.
pub fn disk_green_analytic<T: Scalar>(x: [T; 2], y: [T; 2], r: T) -> T {
    singular_part(x, y) + disk_regular_analytic(x, y, r)
}

/// Robin function `H(x, x) = (1/2π) ln((R² − |x|²)/R)` of the disk.
pub fn disk_robin_analytic<T: Scalar>(x: [T; 2], r: T) -> T {
    let xx = x[0] * x[0] + x[1] * x[1];
    ((r * r - xx) / r).ln() / two_pi::<T>()
}

/// Green function with source `y` on a mesh of the unpierced domain.
#[derive(Debug, Clone)]
pub struct GreenDecomposition {
    pub source: Point,
    pub regular: ScalarField,
    pub robin: f64,
    pub mesh_h: f64,
}

impl GreenDecomposition {
    pub fn regular_at(&self, x: Point) -> Result<f64> {
        self.regular.eval(x)
    }

    pub fn value_at(&self, x: Point) -> Result<f64> {
        Ok(singular_part(x, self.source) + self.regular.eval(x)?)
    }
}

/// Solves for `H(·, y)`: harmonic with data `−(1/2π) ln(1/|x − y|)`.
pub fn green_function(space: &FeSpace, y: Point) -> Result<GreenDecomposition> {
    let mesh = space.mesh();
    if mesh.hole().is_some() {
        return Err(Error::InvalidDomain("Green functions are computed on the unpierced domain".into()));
    }
    let mesh_h = mesh.max_edge();
    let boundary_distance = mesh
        .vertices()
        .iter()
        .zip(mesh.tags())
        .filter(|(_, t)| **t == BoundaryTag::Outer)
        .map(|(p, _)| dist(*p, y))
        .fold(f64::INFINITY, f64::min);
    if mesh.locate(y).is_none() || boundary_distance <= 2.0 * mesh_h {
        return Err(Error::PointOutside(y[0], y[1]));
    }
    let data = |x: Point, _: BoundaryTag| -singular_part(x, y);
    let zero = space.quad_zeros();
    let regular = space.solve_dirichlet(&zero, &BoundaryData::Function(&data))?;
    let robin = regular.eval(y)?;
    Ok(GreenDecomposition {
        source: y,
        regular,
        robin,
        mesh_h,
    })
}

/// Regular part by closed form (disk) or by a finite-element solve.
#[derive(Debug, Clone)]
pub enum RegularPart {
    Disk { center: Point, radius: f64, source: Point },
    Fem(GreenDecomposition),
}

impl RegularPart {
    /// Closed form when `outer` is a disk, otherwise a solve on `space`.
    pub fn for_domain(outer: &OuterBoundary, source: Point, space: Option<&FeSpace>) -> Result<Self> {
        match (outer, space) {
            (OuterBoundary::Disk { center, radius }, _) => Ok(RegularPart::Disk {
                center: *center,
                radius: *radius,
                source,
            }),
            (_, Some(space)) => Ok(RegularPart::Fem(green_function(space, source)?)),
            (_, None) => Err(Error::param("space", "polygonal domains need a mesh for the Green solve")),
        }
    }

    pub fn source(&self) -> Point {
        match self {
            RegularPart::Disk { source, .. } => *source,
            RegularPart::Fem(g) => g.source,
        }
    }

    pub fn regular(&self, x: Point) -> Result<f64> {
        match self {
            RegularPart::Disk { center, radius, source } => Ok(disk_regular_analytic(
                [x[0] - center[0], x[1] - center[1]],
                [source[0] - center[0], source[1] - center[1]],
                *radius,
            )),
            RegularPart::Fem(g) => g.regular_at(x),
        }
    }

    pub fn green(&self, x: Point) -> Result<f64> {
        Ok(singular_part(x, self.source()) + self.regular(x)?)
    }

    pub fn robin(&self) -> f64 {
        match self {
            RegularPart::Disk { center, radius, source } => {
                disk_robin_analytic([source[0] - center[0], source[1] - center[1]], *radius)
            }
            RegularPart::Fem(g) => g.robin,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, RegularPart::Disk { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinRow {
    pub x1: f64,
    pub x2: f64,
    pub robin_value: f64,
    pub mesh_h: f64,
}

/// `H(x, x)` at each point, one independent solve per point.
pub fn robin_table(space: &FeSpace, points: &[Point]) -> Result<Vec<RobinRow>> {
    points
        .par_iter()
        .map(|&p| {
            let g = green_function(space, p)?;
            Ok(RobinRow {
                x1: p[0],
                x2: p[1],
                robin_value: g.robin,
                mesh_h: g.mesh_h,
            })
        })
        .collect()
}

pub fn write_robin_csv(rows: &[RobinRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "x1,x2,robin_value,mesh_h")?;
    for r in rows {
        writeln!(out, "{},{},{:.12e},{:.6e}", r.x1, r.x2, r.robin_value, r.mesh_h)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_formula_values() {
        let g: f64 = disk_green_analytic([0.5, 0.0], [0.0, 0.0], 1.0);
        assert!((g - 2f64.ln() / (2.0 * PI)).abs() < 1e-15);
        let on_boundary: f64 = disk_green_analytic([0.6, 0.8], [0.2, -0.3], 1.0);
        assert!(on_boundary.abs() < 1e-15);
        let robin: f64 = disk_robin_analytic([0.3, 0.0], 1.0);
        assert!((robin - 0.91f64.ln() / (2.0 * PI)).abs() < 1e-15);
        let diag: f64 = disk_regular_analytic([0.3, 0.0], [0.3, 0.0], 1.0);
        assert!((diag - robin).abs() < 1e-15);
    }

    #[test]
    fn disk_formula_is_symmetric_and_scales() {
        let (x, y) = ([0.1, 0.4], [-0.5, 0.2]);
        let a: f64 = disk_green_analytic(x, y, 1.0);
        let b: f64 = disk_green_analytic(y, x, 1.0);
        assert!((a - b).abs() < 1e-15);
        // conformal scaling: G_R(Rx, Ry) = G_1(x, y)
        let c: f64 = disk_green_analytic([2.0 * x[0], 2.0 * x[1]], [2.0 * y[0], 2.0 * y[1]], 2.0);
        assert!((a - c).abs() < 1e-14);
    }

    #[test]
    fn robin_is_maximal_at_center_and_decreases_outward() {
        let mut prev = f64::INFINITY;
        for k in 0..9 {
            let v: f64 = disk_robin_analytic([0.1 * k as f64, 0.0], 1.0);
            assert!(v < prev);
            prev = v;
        }
    }
}
