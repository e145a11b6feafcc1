//! Nodal and quadrature-point fields over a [`TriMesh`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{BoundaryTag, TriMesh};

/// Continuous piecewise-linear field given by its vertex values.
///
/// Fields produced by a Dirichlet solve remember which boundary tags were
/// held at zero.
#[derive(Debug, Clone)]
pub struct ScalarField {
    mesh: Arc<TriMesh>,
    values: Vec<f64>,
    zero_on: Vec<BoundaryTag>,
}

impl ScalarField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.vertex_count() {
            return Err(Error::param(
                "values",
                format!("{} values for {} vertices", values.len(), mesh.vertex_count()),
            ));
        }
        Ok(ScalarField { mesh, values, zero_on: Vec::new() })
    }

    pub fn zeros(mesh: Arc<TriMesh>) -> Self {
        let n = mesh.vertex_count();
        ScalarField { mesh, values: vec![0.0; n], zero_on: Vec::new() }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<TriMesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        ScalarField { mesh, values, zero_on: Vec::new() }
    }

    /// Records that the values vanish on every vertex carrying one of `tags`.
    pub fn with_zero_tags(mut self, tags: &[BoundaryTag]) -> Self {
        self.zero_on = tags.to_vec();
        self
    }

    /// Boundary tags this field was constrained to zero on.
    pub fn zero_tags(&self) -> &[BoundaryTag] {
        &self.zero_on
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value of the piecewise-linear field at `p`.
    pub fn eval(&self, p: Point) -> Result<f64> {
        let (t, b) = self.mesh.locate(p).ok_or(Error::PointOutside(p[0], p[1]))?;
        let tri = self.mesh.triangles()[t];
        Ok((0..3).map(|k| b[k] * self.values[tri[k]]).sum())
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            zero_on: Vec::new(),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }
}

/// Values at every quadrature point, stored triangle by triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadField {
    points_per_triangle: usize,
    values: Vec<f64>,
}

impl QuadField {
    pub fn new(points_per_triangle: usize, values: Vec<f64>) -> Self {
        debug_assert!(points_per_triangle > 0 && values.len() % points_per_triangle == 0);
        QuadField {
            points_per_triangle,
            values,
        }
    }

    pub fn points_per_triangle(&self) -> usize {
        self.points_per_triangle
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn on_triangle(&self, t: usize) -> &[f64] {
        let n = self.points_per_triangle;
        &self.values[t * n..(t + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        QuadField {
            points_per_triangle: self.points_per_triangle,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &QuadField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        QuadField {
            points_per_triangle: self.points_per_triangle,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs(&self.values)
    }
}
