//! P1 finite elements with homogeneous or prescribed Dirichlet data.
//!
//! Every integral of a nonlinear quantity goes through one triangle rule
//! fixed at construction, so discrete identities hold to roundoff.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{QuadField, ScalarField};
use crate::geometry::Point;
use crate::linalg::{Csr, LinearSolver, SolverOptions};
use crate::mesh::{BoundaryTag, TriMesh};
use crate::quadrature::{triangle_rule, TriangleRule};

/// Dirichlet data on the constrained (boundary) vertices.
pub enum BoundaryData<'a> {
    Zero,
    /// Full-length nodal vector; only boundary entries are read.
    Nodal(&'a [f64]),
    Function(&'a (dyn Fn(Point, BoundaryTag) -> f64 + Sync)),
}

#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<TriMesh>,
    rule: &'static TriangleRule,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
    free: Vec<usize>,
    constrained: Vec<usize>,
    free_of: Vec<usize>,
    options: SolverOptions,
    stiffness: OnceLock<Csr>,
    stiffness_free: OnceLock<Csr>,
    stiffness_solver: OnceLock<std::result::Result<LinearSolver, String>>,
}

impl FeSpace {
    pub fn new(mesh: Arc<TriMesh>, order: usize) -> Result<Self> {
        Self::with_options(mesh, order, SolverOptions::default())
    }

    pub fn with_options(mesh: Arc<TriMesh>, order: usize, options: SolverOptions) -> Result<Self> {
        let rule = triangle_rule(order)?;
        let v = mesh.vertices();
        let mut areas = Vec::with_capacity(mesh.triangle_count());
        let mut grads = Vec::with_capacity(mesh.triangle_count());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let (a, b, c) = (v[tri[0]], v[tri[1]], v[tri[2]]);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            if !(det > 0.0) {
                return Err(Error::BrokenMesh(format!("triangle {t} is degenerate or inverted")));
            }
            areas.push(0.5 * det);
            // ∇λ_k = rot(opposite edge) / det
            grads.push([
                [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
                [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
                [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
            ]);
        }
        let mut free = Vec::new();
        let mut constrained = Vec::new();
        let mut free_of = vec![usize::MAX; mesh.vertex_count()];
        for (i, tag) in mesh.tags().iter().enumerate() {
            if tag.is_boundary() {
                constrained.push(i);
            } else {
                free_of[i] = free.len();
                free.push(i);
            }
        }
        if free.is_empty() {
            return Err(Error::EmptySet("mesh has no interior vertices".into()));
        }
        Ok(FeSpace {
            mesh,
            rule,
            areas,
            grads,
            free,
            constrained,
            free_of,
            options,
            stiffness: OnceLock::new(),
            stiffness_free: OnceLock::new(),
            stiffness_solver: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn rule(&self) -> &'static TriangleRule {
        self.rule
    }

    pub fn solver_options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.vertex_count()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn constrained_nodes(&self) -> &[usize] {
        &self.constrained
    }

    /// Distinct boundary tags present among the constrained vertices.
    pub fn constrained_tags(&self) -> Vec<BoundaryTag> {
        let tags = self.mesh.tags();
        let mut out: Vec<BoundaryTag> = Vec::new();
        for &i in &self.constrained {
            if !out.contains(&tags[i]) {
                out.push(tags[i]);
            }
        }
        out
    }

    /// Index among free nodes, if `node` is free.
    pub fn free_index(&self, node: usize) -> Option<usize> {
        let k = self.free_of[node];
        (k != usize::MAX).then_some(k)
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    fn n_q(&self) -> usize {
        self.rule.len()
    }

    pub fn quad_point(&self, t: usize, q: usize) -> Point {
        let v = self.mesh.vertices();
        let tri = self.mesh.triangles()[t];
        let b = self.rule.points[q];
        [
            b[0] * v[tri[0]][0] + b[1] * v[tri[1]][0] + b[2] * v[tri[2]][0],
            b[0] * v[tri[0]][1] + b[1] * v[tri[1]][1] + b[2] * v[tri[2]][1],
        ]
    }

    pub fn quad_zeros(&self) -> QuadField {
        QuadField::new(self.n_q(), vec![0.0; self.n_q() * self.mesh.triangle_count()])
    }

    /// `f` sampled at every quadrature point.
    pub fn quad_from_fn(&self, f: impl Fn(Point) -> f64 + Sync) -> QuadField {
        let nq = self.n_q();
        let values = (0..self.mesh.triangle_count() * nq)
            .into_par_iter()
            .with_min_len(256)
            .map(|k| f(self.quad_point(k / nq, k % nq)))
            .collect();
        QuadField::new(nq, values)
    }

    /// P1 interpolation of nodal values at the quadrature points.
    pub fn quad_from_nodal(&self, nodal: &[f64]) -> QuadField {
        assert_eq!(nodal.len(), self.n_nodes());
        let nq = self.n_q();
        let tris = self.mesh.triangles();
        let values = (0..tris.len() * nq)
            .into_par_iter()
            .with_min_len(256)
            .map(|k| {
                let tri = tris[k / nq];
                let b = self.rule.points[k % nq];
                b[0] * nodal[tri[0]] + b[1] * nodal[tri[1]] + b[2] * nodal[tri[2]]
            })
            .collect();
        QuadField::new(nq, values)
    }

    pub fn integrate_quad(&self, f: &QuadField) -> f64 {
        let nq = self.n_q();
        let w = &self.rule.weights;
        // Fixed-size chunks keep the summation order independent of thread count.
        (0..self.mesh.triangle_count())
            .collect::<Vec<_>>()
            .par_chunks(1024)
            .map(|ts| {
                ts.iter()
                    .map(|&t| {
                        let vals = &f.values()[t * nq..(t + 1) * nq];
                        self.areas[t] * vals.iter().zip(w).map(|(v, w)| v * w).sum::<f64>()
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }

    pub fn integrate_nodal(&self, nodal: &[f64]) -> f64 {
        self.integrate_quad(&self.quad_from_nodal(nodal))
    }

    /// `F_i = ∫ f φ_i` for every vertex.
    pub fn load(&self, f: &QuadField) -> Vec<f64> {
        let nq = self.n_q();
        let rule = self.rule;
        let tris = self.mesh.triangles();
        let local: Vec<[f64; 3]> = (0..tris.len())
            .into_par_iter()
            .with_min_len(256)
            .map(|t| {
                let vals = &f.values()[t * nq..(t + 1) * nq];
                let mut out = [0.0; 3];
                for (q, &v) in vals.iter().enumerate() {
                    let wv = rule.weights[q] * v * self.areas[t];
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += wv * rule.points[q][k];
                    }
                }
                out
            })
            .collect();
        let mut load = vec![0.0; self.n_nodes()];
        for (tri, l) in tris.iter().zip(&local) {
            for k in 0..3 {
                load[tri[k]] += l[k];
            }
        }
        load
    }

    /// Stiffness matrix on all vertices.
    pub fn stiffness(&self) -> &Csr {
        self.stiffness.get_or_init(|| {
            let tris = self.mesh.triangles();
            let local: Vec<(usize, usize, f64)> = (0..tris.len())
                .into_par_iter()
                .with_min_len(256)
                .flat_map_iter(|t| {
                    let g = self.grads[t];
                    let a = self.areas[t];
                    let tri = tris[t];
                    (0..9).map(move |k| {
                        let (i, j) = (k / 3, k % 3);
                        (tri[i], tri[j], a * (g[i][0] * g[j][0] + g[i][1] * g[j][1]))
                    })
                })
                .collect();
            Csr::from_triplets(self.n_nodes(), self.n_nodes(), local)
        })
    }

    /// Stiffness restricted to free vertices.
    pub fn stiffness_free(&self) -> &Csr {
        self.stiffness_free.get_or_init(|| self.stiffness().submatrix(&self.free, &self.free))
    }

    /// Weighted mass matrix `∫ k φ_i φ_j` on all vertices.
    pub fn weighted_mass(&self, k: &QuadField) -> Csr {
        let nq = self.n_q();
        let rule = self.rule;
        let tris = self.mesh.triangles();
        let local: Vec<(usize, usize, f64)> = (0..tris.len())
            .into_par_iter()
            .with_min_len(256)
            .flat_map_iter(|t| {
                let vals = &k.values()[t * nq..(t + 1) * nq];
                let mut m = [[0.0; 3]; 3];
                for (q, &v) in vals.iter().enumerate() {
                    let wv = rule.weights[q] * v * self.areas[t];
                    let b = rule.points[q];
                    for i in 0..3 {
                        for j in 0..3 {
                            m[i][j] += wv * b[i] * b[j];
                        }
                    }
                }
                let tri = tris[t];
                (0..9).map(move |k| (tri[k / 3], tri[k % 3], m[k / 3][k % 3]))
            })
            .collect();
        Csr::from_triplets(self.n_nodes(), self.n_nodes(), local)
    }

    /// Cached factorization of the free-node stiffness matrix.
    pub fn stiffness_solver(&self) -> Result<&LinearSolver> {
        self.stiffness_solver
            .get_or_init(|| LinearSolver::spd(self.stiffness_free(), &self.options).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::SingularSystem(e.clone()))
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Full nodal vector with `free_values` inside and zero on the boundary.
    pub fn extend_zero(&self, free_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for (k, &i) in self.free.iter().enumerate() {
            out[i] = free_values[k];
        }
        out
    }

    pub fn boundary_values(&self, data: &BoundaryData<'_>) -> Vec<f64> {
        let mut g = vec![0.0; self.n_nodes()];
        let v = self.mesh.vertices();
        let tags = self.mesh.tags();
        for &i in &self.constrained {
            g[i] = match data {
                BoundaryData::Zero => 0.0,
                BoundaryData::Nodal(vals) => vals[i],
                BoundaryData::Function(f) => f(v[i], tags[i]),
            };
        }
        g
    }

    /// Solves `-Δu = f` with the given Dirichlet data.
    pub fn solve_dirichlet(&self, f: &QuadField, data: &BoundaryData<'_>) -> Result<ScalarField> {
        let load = self.load(f);
        self.solve_dirichlet_load(&load, data)
    }

    /// As [`solve_dirichlet`](Self::solve_dirichlet) but with an assembled load vector.
    pub fn solve_dirichlet_load(&self, load: &[f64], data: &BoundaryData<'_>) -> Result<ScalarField> {
        let g = self.boundary_values(data);
        let mut rhs = self.restrict(load);
        if !matches!(data, BoundaryData::Zero) {
            let kg = self.stiffness().matvec(&g);
            for (k, &i) in self.free.iter().enumerate() {
                rhs[k] -= kg[i];
            }
        }
        let x = self.stiffness_solver()?.solve(&rhs)?;
        let mut u = g;
        for (k, &i) in self.free.iter().enumerate() {
            u[i] = x[k];
        }
        let field = ScalarField::new(self.mesh.clone(), u)?;
        Ok(match data {
            BoundaryData::Zero => field.with_zero_tags(&self.constrained_tags()),
            _ => field,
        })
    }

    /// Discrete `H^{-1}` norm of a functional given on free nodes:
    /// `sqrt(Fᵀ K⁻¹ F)`.
    pub fn dual_norm(&self, free_load: &[f64]) -> Result<f64> {
        let x = self.stiffness_solver()?.solve(free_load)?;
        Ok(crate::linalg::dot(free_load, &x).max(0.0).sqrt())
    }

    /// `(∫|u|^p)^{1/p}` by the space's quadrature.
    pub fn lp_norm(&self, nodal: &[f64], p: f64) -> f64 {
        let q = self.quad_from_nodal(nodal).map(|v| v.abs().powf(p));
        self.integrate_quad(&q).powf(1.0 / p)
    }

    pub fn lp_norm_quad(&self, f: &QuadField, p: f64) -> f64 {
        self.integrate_quad(&f.map(|v| v.abs().powf(p))).powf(1.0 / p)
    }

    pub fn h1_seminorm(&self, nodal: &[f64]) -> f64 {
        let ku = self.stiffness().matvec(nodal);
        crate::linalg::dot(nodal, &ku).max(0.0).sqrt()
    }

    /// Averages nodal values over the rotation group of the mesh.
    pub fn symmetrize(&self, nodal: &mut [f64]) -> Result<()> {
        symmetrize_values(&self.mesh, nodal)
    }

    /// Largest `|u(Rx) - u(x)|` over vertices.
    pub fn symmetry_defect(&self, nodal: &[f64]) -> Result<f64> {
        let s = self.mesh.symmetry().ok_or(Error::MissingSymmetry)?;
        Ok(nodal
            .iter()
            .enumerate()
            .map(|(i, v)| (nodal[s.perm[i]] - v).abs())
            .fold(0.0, f64::max))
    }
}

pub fn symmetrize_values(mesh: &TriMesh, nodal: &mut [f64]) -> Result<()> {
    let s = mesh.symmetry().ok_or(Error::MissingSymmetry)?;
    let order = s.group_order();
    let n = nodal.len();
    let mut acc = nodal.to_vec();
    let mut image: Vec<usize> = (0..n).collect();
    for _ in 1..order {
        image = image.iter().map(|&i| s.perm[i]).collect();
        for i in 0..n {
            acc[i] += nodal[image[i]];
        }
    }
    for i in 0..n {
        nodal[i] = acc[i] / order as f64;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{OuterBoundary, PiercedDomainSpec};
    use crate::mesh::{build_mesh, build_unpierced_mesh};

    fn disk_space(h: f64) -> FeSpace {
        let mesh = build_unpierced_mesh(&OuterBoundary::unit_disk(), [0.0, 0.0], h, None).unwrap();
        FeSpace::new(Arc::new(mesh), 5).unwrap()
    }

    #[test]
    fn stiffness_annihilates_constants_and_is_symmetric() {
        let s = disk_space(0.2);
        let k = s.stiffness();
        let ones = vec![1.0; s.n_nodes()];
        assert!(crate::linalg::max_abs(&k.matvec(&ones)) < 1e-12);
        assert!(k.asymmetry() < 1e-14);
    }

    #[test]
    fn mass_of_one_is_area() {
        let s = disk_space(0.2);
        let one = s.quad_from_fn(|_| 1.0);
        let m = s.weighted_mass(&one);
        let total: f64 = m.triplets().iter().map(|t| t.2).sum();
        assert!((total - s.mesh().area()).abs() < 1e-12);
        let load: f64 = s.load(&one).iter().sum();
        assert!((load - s.mesh().area()).abs() < 1e-12);
    }

    #[test]
    fn poisson_on_disk_converges() {
        // -Δu = 4 with u = 0 on r = 1 has u = 1 - r².
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let s = disk_space(h);
            let f = s.quad_from_fn(|_| 4.0);
            let u = s.solve_dirichlet(&f, &BoundaryData::Zero).unwrap();
            let err = s
                .mesh()
                .vertices()
                .iter()
                .zip(u.values())
                .map(|(p, v)| (v - (1.0 - p[0] * p[0] - p[1] * p[1])).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 0.35 * errs[0], "{errs:?}");
        assert!(errs[1] < 5e-3);
    }

    #[test]
    fn harmonic_data_reproduced_on_annulus() {
        // ln r is harmonic; check interpolation error decreases on a graded mesh.
        let spec = PiercedDomainSpec::centered_unit_disk(1e-2, None).unwrap();
        let mesh = Arc::new(build_mesh(&spec, 0.05, 0.1).unwrap());
        let s = FeSpace::new(mesh, 5).unwrap();
        let f = s.quad_zeros();
        let g = |p: Point, _: BoundaryTag| (p[0] * p[0] + p[1] * p[1]).sqrt().ln();
        let u = s.solve_dirichlet(&f, &BoundaryData::Function(&g)).unwrap();
        let err = s
            .mesh()
            .vertices()
            .iter()
            .zip(u.values())
            .map(|(p, v)| (v - g(*p, BoundaryTag::Interior)).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-2, "max error {err}");
    }

    #[test]
    fn symmetrize_gives_invariant_field() {
        let spec = PiercedDomainSpec::centered_unit_disk(1e-2, Some(2)).unwrap();
        let mesh = Arc::new(build_mesh(&spec, 0.1, 0.2).unwrap());
        let s = FeSpace::new(mesh.clone(), 3).unwrap();
        let mut v: Vec<f64> = mesh.vertices().iter().map(|p| p[0] + 2.0 * p[1] * p[1]).collect();
        assert!(s.symmetry_defect(&v).unwrap() > 0.1);
        s.symmetrize(&mut v).unwrap();
        assert!(s.symmetry_defect(&v).unwrap() < 1e-14);
    }
}
