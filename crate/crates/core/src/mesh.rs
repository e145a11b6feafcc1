//! Graded triangulations of pierced and unpierced star-shaped domains.
//!
//! Meshes are built ring by ring around the hole center: each ring is a
//! closed curve `r(θ, s) = ε (ρ(θ)/ε)^s` (pierced) or `r = s ρ(θ)`
//! (unpierced), where `ρ(θ)` is the radial extent of Ω seen from the center.
//! Consecutive rings are stitched by a zipper triangulation inside one
//! fundamental sector of angle `2π/S`, improved by Lawson flips, and the
//! sector is replicated `S` times. With `S = 2κ` the rotation by `π/κ` is an
//! exact vertex permutation.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{cross, dist, dot, rotate_about, sub, OuterBoundary, PiercedDomainSpec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    Outer,
    Hole,
}

impl BoundaryTag {
    pub fn is_boundary(self) -> bool {
        self != BoundaryTag::Interior
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Interior => "interior",
            BoundaryTag::Outer => "outer",
            BoundaryTag::Hole => "hole",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "interior" => Some(BoundaryTag::Interior),
            "outer" => Some(BoundaryTag::Outer),
            "hole" => Some(BoundaryTag::Hole),
            _ => None,
        }
    }
}

/// Rotation by `π/κ` (counterclockwise) about `center` as a vertex permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetry {
    pub kappa: u32,
    pub center: Point,
    /// `perm[i]` is the index of the rotated image of vertex `i`.
    pub perm: Vec<usize>,
}

impl Symmetry {
    /// Number of rotations in the generated group.
    pub fn group_order(&self) -> usize {
        2 * self.kappa as usize
    }

    pub fn angle(&self) -> f64 {
        PI / self.kappa as f64
    }

    /// `perm` composed with itself `times` times.
    pub fn power(&self, times: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.perm.len()).collect();
        for _ in 0..times {
            out = out.iter().map(|&i| self.perm[i]).collect();
        }
        out
    }
}

/// Target element size `h(x)` as a function of the distance to the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeField {
    pub center: Point,
    pub h_far: f64,
    pub grading: f64,
    pub hole_radius: Option<f64>,
    pub concentration_scale: Option<f64>,
}

impl SizeField {
    pub fn at_radius(&self, r: f64) -> f64 {
        let mut h = self.h_far;
        if let Some(eps) = self.hole_radius {
            h = h.min((self.grading * r).max(eps / 4.0));
        }
        if let Some(delta) = self.concentration_scale {
            if r > delta / 4.0 && r < 4.0 * delta {
                h = h.min(delta / 6.0);
            }
        }
        h
    }

    pub fn at(&self, x: Point) -> f64 {
        self.at_radius(dist(x, self.center))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub h_far: f64,
    pub grading: f64,
    /// Concentration scale δ; sizes in `δ/4 < r < 4δ` are capped at `δ/6`.
    pub concentration_scale: Option<f64>,
    pub min_hole_segments: usize,
}

impl MeshOptions {
    pub fn new(h_far: f64, grading: f64) -> Self {
        MeshOptions {
            h_far,
            grading,
            concentration_scale: None,
            min_hole_segments: 64,
        }
    }

    pub fn with_concentration(mut self, delta: f64) -> Self {
        self.concentration_scale = Some(delta);
        self
    }
}

#[derive(Debug)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<BoundaryTag>,
    size: Option<SizeField>,
    symmetry: Option<Symmetry>,
    hole: Option<(Point, f64)>,
    delaunay: bool,
    locator: OnceLock<Locator>,
}

impl Clone for TriMesh {
    fn clone(&self) -> Self {
        TriMesh {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            tags: self.tags.clone(),
            size: self.size,
            symmetry: self.symmetry.clone(),
            hole: self.hole,
            delaunay: self.delaunay,
            locator: OnceLock::new(),
        }
    }
}

impl TriMesh {
    /// Assembles a mesh from raw parts, checking orientation and indices.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        tags: Vec<BoundaryTag>,
        symmetry: Option<Symmetry>,
    ) -> Result<Self> {
        if tags.len() != vertices.len() {
            return Err(Error::BrokenMesh("tag count differs from vertex count".into()));
        }
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::BrokenMesh(format!("triangle {t} has an out-of-range vertex")));
            }
            let a = signed_area(&vertices, tri);
            if !(a > 0.0) {
                return Err(Error::BrokenMesh(format!("triangle {t} has signed area {a:e}")));
            }
        }
        if let Some(s) = &symmetry {
            if s.perm.len() != n || s.kappa == 0 {
                return Err(Error::BrokenMesh("symmetry permutation has wrong length".into()));
            }
            let mut seen = vec![false; n];
            for &j in &s.perm {
                if j >= n || std::mem::replace(&mut seen[j], true) {
                    return Err(Error::BrokenMesh("symmetry map is not a permutation".into()));
                }
            }
        }
        let mut mesh = TriMesh {
            vertices,
            triangles,
            tags,
            size: None,
            symmetry,
            hole: None,
            delaunay: false,
            locator: OnceLock::new(),
        };
        mesh.delaunay = mesh.check_delaunay();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn tags(&self) -> &[BoundaryTag] {
        &self.tags
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn size_field(&self) -> Option<&SizeField> {
        self.size.as_ref()
    }

    pub fn symmetry(&self) -> Option<&Symmetry> {
        self.symmetry.as_ref()
    }

    /// Hole center and radius, for meshes of pierced domains.
    pub fn hole(&self) -> Option<(Point, f64)> {
        self.hole
    }

    /// Attaches the hole circle `(center, radius)` to a mesh assembled from parts.
    pub fn with_hole(mut self, center: Point, radius: f64) -> Self {
        self.hole = Some((center, radius));
        self
    }

    pub fn is_delaunay(&self) -> bool {
        self.delaunay
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn signed_areas(&self) -> Vec<f64> {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).collect()
    }

    /// Edges used by exactly one triangle, in sorted vertex order.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry([a.min(b), a.max(b)]).or_default() += 1;
            }
        }
        let mut edges: Vec<_> = count.into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect();
        edges.sort_unstable();
        edges
    }

    /// Number of boundary edges whose endpoints both carry `tag`.
    pub fn boundary_edge_count(&self, tag: BoundaryTag) -> usize {
        self.boundary_edges()
            .iter()
            .filter(|e| self.tags[e[0]] == tag && self.tags[e[1]] == tag)
            .count()
    }

    /// Longest edge of triangle `t`.
    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let tri = &self.triangles[t];
        (0..3)
            .map(|k| dist(self.vertices[tri[k]], self.vertices[tri[(k + 1) % 3]]))
            .fold(0.0, f64::max)
    }

    pub fn max_edge(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_diameter(t)).fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist(lo, hi)
    }

    /// Largest deviation between mapped vertex coordinates and rotated ones.
    pub fn symmetry_defect(&self) -> Option<f64> {
        let s = self.symmetry.as_ref()?;
        let angle = s.angle();
        Some(
            self.vertices
                .iter()
                .enumerate()
                .map(|(i, &v)| dist(rotate_about(v, s.center, angle), self.vertices[s.perm[i]]))
                .fold(0.0, f64::max),
        )
    }

    fn check_delaunay(&self) -> bool {
        let mut opposite: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                opposite.entry([a.min(b), a.max(b)]).or_default().push(c);
            }
        }
        opposite.iter().all(|(e, opp)| {
            if opp.len() != 2 {
                return true;
            }
            let (a, b) = (self.vertices[e[0]], self.vertices[e[1]]);
            let s = angle_at(self.vertices[opp[0]], a, b) + angle_at(self.vertices[opp[1]], a, b);
            s <= PI + 1e-9
        })
    }

    pub fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(self))
    }

    /// Containing triangle and barycentric coordinates; points slightly
    /// outside the polygonal boundary resolve to the nearest triangle with
    /// unclamped (extrapolating) coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        self.locator().locate(self, p)
    }

    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        barycentric(&self.vertices, &self.triangles[t], p)
    }
}

fn signed_area(v: &[Point], tri: &[usize; 3]) -> f64 {
    0.5 * cross(sub(v[tri[1]], v[tri[0]]), sub(v[tri[2]], v[tri[0]]))
}

fn barycentric(v: &[Point], tri: &[usize; 3], p: Point) -> [f64; 3] {
    let (a, b, c) = (v[tri[0]], v[tri[1]], v[tri[2]]);
    let det = cross(sub(b, a), sub(c, a));
    let l1 = cross(sub(p, a), sub(c, a)) / det;
    let l2 = cross(sub(b, a), sub(p, a)) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Interior angle at `c` of the triangle `(a, b, c)`.
fn angle_at(c: Point, a: Point, b: Point) -> f64 {
    let u = sub(a, c);
    let w = sub(b, c);
    cross(u, w).abs().atan2(dot(u, w))
}

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Debug)]
pub struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl Locator {
    fn new(mesh: &TriMesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let ntri = mesh.triangles.len().max(1);
        let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(1e-300);
        let cell = (area / ntri as f64).sqrt() * 2.0;
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut tlo = [f64::INFINITY; 2];
            let mut thi = [f64::NEG_INFINITY; 2];
            for &v in tri {
                for k in 0..2 {
                    tlo[k] = tlo[k].min(mesh.vertices[v][k]);
                    thi[k] = thi[k].max(mesh.vertices[v][k]);
                }
            }
            let (i0, j0) = Self::cell_of(lo, cell, nx, ny, tlo);
            let (i1, j1) = Self::cell_of(lo, cell, nx, ny, thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(origin: Point, cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
        let i = ((p[0] - origin[0]) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let j = ((p[1] - origin[1]) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (i, j)
    }

    fn locate(&self, mesh: &TriMesh, p: Point) -> Option<(usize, [f64; 3])> {
        let (ci, cj) = Self::cell_of(self.origin, self.cell, self.nx, self.ny, p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for radius in 0..4usize {
            let i0 = ci.saturating_sub(radius);
            let j0 = cj.saturating_sub(radius);
            let i1 = (ci + radius).min(self.nx - 1);
            let j1 = (cj + radius).min(self.ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    if radius > 0 && i > i0 && i < i1 && j > j0 && j < j1 {
                        continue;
                    }
                    for &t in &self.buckets[j * self.nx + i] {
                        let t = t as usize;
                        let b = mesh.barycentric(t, p);
                        let worst = b.iter().copied().fold(f64::INFINITY, f64::min);
                        if worst >= -1e-12 {
                            return Some((t, b));
                        }
                        if best.as_ref().map_or(true, |(_, _, w)| worst > *w) {
                            best = Some((t, b, worst));
                        }
                    }
                }
            }
            if best.is_some() && radius >= 1 {
                break;
            }
        }
        best.map(|(t, b, _)| (t, b))
    }
}

/// Sector-local polyline description of one ring.
struct Ring {
    /// Node positions for local indices `0..=last` in the fundamental sector.
    points: Vec<Point>,
    tag: BoundaryTag,
}

fn round_up_multiple(m: usize, s: usize) -> usize {
    m.div_ceil(s) * s
}

/// Builds a graded mesh of `Ω \ B(ξ, ε)`.
pub fn build_mesh(spec: &PiercedDomainSpec, h_far: f64, grading: f64) -> Result<TriMesh> {
    build_mesh_with(spec, &MeshOptions::new(h_far, grading))
}

pub fn build_mesh_with(spec: &PiercedDomainSpec, opts: &MeshOptions) -> Result<TriMesh> {
    spec.validate()?;
    let diam = spec.outer.diameter();
    check_sizes(opts.h_far, opts.grading, diam)?;
    let xi = spec.hole_center;
    let eps = spec.hole_radius;
    if !spec.outer.is_star_shaped_about(xi) {
        return Err(Error::InvalidDomain(
            "outer region must be star-shaped with respect to the hole center".into(),
        ));
    }
    let sectors = spec.symmetry_order.map_or(1, |k| 2 * k as usize);
    let size = SizeField {
        center: xi,
        h_far: opts.h_far,
        grading: opts.grading,
        hole_radius: Some(eps),
        concentration_scale: opts.concentration_scale,
    };
    let rho_ref = reference_extent(&spec.outer, xi);
    let m_of = |r: f64| -> usize {
        let h = size.at_radius(r);
        let m_hole = opts.min_hole_segments.max((TAU * eps / size.at_radius(eps)).ceil() as usize);
        m_hole.max((TAU * r / h).ceil() as usize)
    };

    // Ring levels in τ = ln(r/ε), marched inward from the outer boundary so the
    // far-field rings do not depend on ε.
    let t_max = (rho_ref / eps).ln();
    let mut taus = vec![t_max];
    loop {
        let tau = *taus.last().unwrap();
        let r = eps * tau.exp();
        let step = TAU / m_of(r) as f64;
        let next = tau - step;
        if next <= 0.5 * step {
            break;
        }
        taus.push(next);
    }
    taus.push(0.0);
    taus.reverse();

    let mut counts = Vec::with_capacity(taus.len());
    let mut prev = 0usize;
    for &tau in &taus {
        let m = round_up_multiple(m_of(eps * tau.exp()), sectors).max(prev);
        counts.push(m);
        prev = m;
    }

    let sector_angle = TAU / sectors as f64;
    let corners = spec.outer.corner_angles(xi);
    let nrings = taus.len();
    let rings: Vec<Ring> = taus
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(k, (&tau, &m))| {
            let s = tau / t_max;
            let outer = k == nrings - 1;
            let angles = ring_angles(m / sectors, m, sector_angle, if outer { &corners } else { &[] });
            let points = angles
                .iter()
                .map(|&th| {
                    let r = if k == 0 {
                        eps
                    } else if outer {
                        spec.outer.radial_extent(xi, th)
                    } else {
                        eps * (s * (spec.outer.radial_extent(xi, th) / eps).ln()).exp()
                    };
                    [xi[0] + r * th.cos(), xi[1] + r * th.sin()]
                })
                .collect();
            let tag = if k == 0 {
                BoundaryTag::Hole
            } else if outer {
                BoundaryTag::Outer
            } else {
                BoundaryTag::Interior
            };
            Ring { points, tag }
        })
        .collect();

    let mut mesh = assemble_sectors(&rings, None, xi, sectors, spec.symmetry_order)?;
    mesh.size = Some(size);
    mesh.hole = Some((xi, eps));
    Ok(mesh)
}

/// Quasi-uniform mesh of the unpierced Ω, star-shaped about `center`.
pub fn build_unpierced_mesh(
    outer: &OuterBoundary,
    center: Point,
    h: f64,
    kappa: Option<u32>,
) -> Result<TriMesh> {
    outer.validate()?;
    let diam = outer.diameter();
    check_sizes(h, 1.0, diam)?;
    if !outer.contains(center) || !outer.is_star_shaped_about(center) {
        return Err(Error::InvalidDomain(
            "outer region must be star-shaped with respect to the mesh center".into(),
        ));
    }
    if let Some(k) = kappa {
        outer.check_symmetry(center, k)?;
    }
    let sectors = kappa.map_or(1, |k| 2 * k as usize);
    let rho_ref = reference_extent(outer, center);
    let nr = ((rho_ref / h).ceil() as usize).max(2);
    let sector_angle = TAU / sectors as f64;
    let corners = outer.corner_angles(center);
    let mut prev = 0usize;
    let mut rings = Vec::with_capacity(nr);
    for k in 1..=nr {
        let s = k as f64 / nr as f64;
        let m = round_up_multiple(((TAU * s * rho_ref / h).ceil() as usize).max(6), sectors).max(prev);
        prev = m;
        let outer_ring = k == nr;
        let angles = ring_angles(m / sectors, m, sector_angle, if outer_ring { &corners } else { &[] });
        let points = angles
            .iter()
            .map(|&th| {
                let r = s * outer.radial_extent(center, th);
                [center[0] + r * th.cos(), center[1] + r * th.sin()]
            })
            .collect();
        rings.push(Ring {
            points,
            tag: if outer_ring { BoundaryTag::Outer } else { BoundaryTag::Interior },
        });
    }
    let mut mesh = assemble_sectors(&rings, Some(center), center, sectors, kappa)?;
    mesh.size = Some(SizeField {
        center,
        h_far: h,
        grading: 1.0,
        hole_radius: None,
        concentration_scale: None,
    });
    Ok(mesh)
}

fn check_sizes(h_far: f64, grading: f64, diam: f64) -> Result<()> {
    if !(grading > 0.0 && grading <= 1.0) {
        return Err(Error::param("grading", format!("{grading} not in (0, 1]")));
    }
    if !(h_far > 0.0 && h_far < diam / 4.0) {
        return Err(Error::param("h_far", format!("{h_far} not in (0, diam/4 = {})", diam / 4.0)));
    }
    Ok(())
}

fn reference_extent(outer: &OuterBoundary, origin: Point) -> f64 {
    let mut rho: f64 = 0.0;
    for i in 0..1440 {
        rho = rho.max(outer.radial_extent(origin, TAU * i as f64 / 1440.0));
    }
    for th in outer.corner_angles(origin) {
        rho = rho.max(outer.radial_extent(origin, th));
    }
    rho
}

/// Angles `2πj/m_total` for `j = 0..=per_sector`, merged with corner angles
/// strictly inside the sector.
fn ring_angles(per_sector: usize, m_total: usize, sector_angle: f64, corners: &[f64]) -> Vec<f64> {
    let spacing = TAU / m_total as f64;
    let mut angles: Vec<f64> = (0..=per_sector).map(|j| spacing * j as f64).collect();
    let inside: Vec<f64> = corners
        .iter()
        .map(|c| c.rem_euclid(sector_angle))
        .filter(|c| *c > 1e-12 && *c < sector_angle - 1e-12)
        .collect();
    if inside.is_empty() {
        return angles;
    }
    // Drop interior uniform angles crowding a corner; sector end points stay.
    angles.retain(|a| {
        let end = *a < 1e-15 || (*a - sector_angle).abs() < 1e-12;
        end || inside.iter().all(|c| (a - c).abs() > 0.3 * spacing)
    });
    angles.extend(inside);
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    angles
}

/// Zipper triangulation between an inner and outer polyline, ccw.
/// Returns triples of (ring selector, local index): selector 0 = inner, 1 = outer.
fn zipper(inner: &[Point], outer: &[Point]) -> Vec<[(u8, usize); 3]> {
    let (p, q) = (inner.len() - 1, outer.len() - 1);
    let (mut i, mut j) = (0usize, 0usize);
    let mut tris = Vec::with_capacity(p + q);
    while i < p || j < q {
        let advance_outer = if i == p {
            true
        } else if j == q {
            false
        } else {
            dist(inner[i], outer[j + 1]) < dist(inner[i + 1], outer[j])
        };
        if advance_outer {
            tris.push([(0, i), (1, j), (1, j + 1)]);
            j += 1;
        } else {
            tris.push([(0, i), (1, j), (0, i + 1)]);
            i += 1;
        }
    }
    tris
}

/// Lawson edge flips toward the Delaunay triangulation; boundary edges of the
/// local triangulation are never touched.
fn lawson_flips(points: &[Point], tris: &mut [[usize; 3]]) {
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            edge_tris.entry(key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
        }
    }
    let mut stack: Vec<(usize, usize)> = edge_tris.iter().filter(|(_, v)| v.len() == 2).map(|(e, _)| *e).collect();
    stack.sort_unstable();
    let mut guard = 0usize;
    let limit = 50 * tris.len() + 100;
    while let Some((a, b)) = stack.pop() {
        guard += 1;
        if guard > limit {
            break;
        }
        let Some(owners) = edge_tris.get(&(a, b)) else { continue };
        if owners.len() != 2 {
            continue;
        }
        let (t1, t2) = (owners[0], owners[1]);
        let c = *tris[t1].iter().find(|&&v| v != a && v != b).unwrap();
        let d = *tris[t2].iter().find(|&&v| v != a && v != b).unwrap();
        let sum = angle_at(points[c], points[a], points[b]) + angle_at(points[d], points[a], points[b]);
        if sum <= PI + 1e-10 {
            continue;
        }
        // Orient new triangles (c, d, x) counterclockwise.
        let orient = |x: usize, y: usize, z: usize| {
            if cross(sub(points[y], points[x]), sub(points[z], points[x])) > 0.0 {
                [x, y, z]
            } else {
                [x, z, y]
            }
        };
        let n1 = orient(c, d, a);
        let n2 = orient(c, d, b);
        if signed_area(points, &n1) <= 0.0 || signed_area(points, &n2) <= 0.0 {
            continue;
        }
        for (t, old) in [(t1, tris[t1]), (t2, tris[t2])] {
            for k in 0..3 {
                let e = key(old[k], old[(k + 1) % 3]);
                if let Some(v) = edge_tris.get_mut(&e) {
                    v.retain(|&x| x != t);
                }
            }
        }
        tris[t1] = n1;
        tris[t2] = n2;
        for t in [t1, t2] {
            let tri = tris[t];
            for k in 0..3 {
                let e = key(tri[k], tri[(k + 1) % 3]);
                edge_tris.entry(e).or_default().push(t);
                if e != key(c, d) {
                    stack.push(e);
                }
            }
        }
        edge_tris.remove(&key(a, b));
    }
}

/// Triangulates the fundamental sector and replicates it `sectors` times.
fn assemble_sectors(
    rings: &[Ring],
    center_node: Option<Point>,
    rot_center: Point,
    sectors: usize,
    kappa: Option<u32>,
) -> Result<TriMesh> {
    // Local numbering inside the sector.
    let mut local_points: Vec<Point> = Vec::new();
    let mut local_id: Vec<Vec<usize>> = Vec::with_capacity(rings.len());
    let center_local = center_node.map(|c| {
        local_points.push(c);
        0usize
    });
    for ring in rings {
        let ids = (0..ring.points.len())
            .map(|j| {
                local_points.push(ring.points[j]);
                local_points.len() - 1
            })
            .collect();
        local_id.push(ids);
    }
    let mut local_tris: Vec<[usize; 3]> = Vec::new();
    if let Some(c) = center_local {
        let ids = &local_id[0];
        for j in 0..ids.len() - 1 {
            local_tris.push([c, ids[j], ids[j + 1]]);
        }
    }
    for k in 0..rings.len() - 1 {
        for tri in zipper(&rings[k].points, &rings[k + 1].points) {
            let map = |(sel, j): (u8, usize)| local_id[k + sel as usize][j];
            local_tris.push([map(tri[0]), map(tri[1]), map(tri[2])]);
        }
    }
    for (t, tri) in local_tris.iter().enumerate() {
        if signed_area(&local_points, tri) <= 0.0 {
            return Err(Error::BrokenMesh(format!("zipper produced inverted triangle {t}")));
        }
    }
    lawson_flips(&local_points, &mut local_tris);

    // Global numbering: ring k holds `sectors * (len - 1)` nodes; the last local
    // node of a sector is the first node of the next one.
    let mut offsets = Vec::with_capacity(rings.len());
    let mut total = usize::from(center_node.is_some());
    for ring in rings {
        offsets.push(total);
        total += sectors * (ring.points.len() - 1);
    }
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; local_points.len()];
    for (k, ids) in local_id.iter().enumerate() {
        for (j, &id) in ids.iter().enumerate() {
            owner[id] = Some((k, j));
        }
    }
    let global = |local: usize, sector: usize| -> usize {
        match owner[local] {
            None => 0,
            Some((k, j)) => {
                let per = rings[k].points.len() - 1;
                let g = sectors * per;
                offsets[k] + (sector * per + j) % g
            }
        }
    };

    let mut vertices = vec![[0.0; 2]; total];
    let mut tags = vec![BoundaryTag::Interior; total];
    if let Some(c) = center_node {
        vertices[0] = c;
    }
    let sector_angle = TAU / sectors as f64;
    for (k, ring) in rings.iter().enumerate() {
        let per = ring.points.len() - 1;
        for sector in 0..sectors {
            for j in 0..per {
                let g = offsets[k] + sector * per + j;
                vertices[g] = if sector == 0 {
                    ring.points[j]
                } else {
                    rotate_about(ring.points[j], rot_center, sector_angle * sector as f64)
                };
                tags[g] = ring.tag;
            }
        }
    }
    let mut triangles = Vec::with_capacity(local_tris.len() * sectors);
    for sector in 0..sectors {
        for tri in &local_tris {
            triangles.push([global(tri[0], sector), global(tri[1], sector), global(tri[2], sector)]);
        }
    }
    let symmetry = kappa.map(|kappa| {
        let mut perm: Vec<usize> = (0..total).collect();
        let shift = sectors / (2 * kappa as usize);
        for (k, ring) in rings.iter().enumerate() {
            let per = ring.points.len() - 1;
            let g = sectors * per;
            for i in 0..g {
                perm[offsets[k] + i] = offsets[k] + (i + shift * per) % g;
            }
        }
        Symmetry {
            kappa,
            center: rot_center,
            perm,
        }
    });
    TriMesh::from_parts(vertices, triangles, tags, symmetry)
}
