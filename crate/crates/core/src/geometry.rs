//! Planar geometry of the pierced domain `Ω \ B(ξ, ε)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Counterclockwise rotation of `p` by `angle` about `center`.
#[inline]
pub fn rotate_about(p: Point, center: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    let d = sub(p, center);
    [center[0] + c * d[0] - s * d[1], center[1] + s * d[0] + c * d[1]]
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    (o1 * o2 < 0.0) && (o3 * o4 < 0.0)
}

/// Outer boundary of Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    Disk { center: Point, radius: f64 },
    /// Closed polygon, vertices listed counterclockwise without repeating the first.
    Polygon { vertices: Vec<Point> },
}

impl OuterBoundary {
    pub fn unit_disk() -> Self {
        OuterBoundary::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OuterBoundary::Disk { radius, center } => {
                if !(radius.is_finite() && *radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidDomain(format!("bad disk radius {radius}")));
                }
            }
            OuterBoundary::Polygon { vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
                }
                if self.signed_area() <= 0.0 {
                    return Err(Error::InvalidDomain(
                        "polygon must be listed counterclockwise".into(),
                    ));
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        if j == i + 1 || (i == 0 && j == n - 1) {
                            continue;
                        }
                        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                        let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                        if segments_intersect(a, b, c, d) {
                            return Err(Error::SelfIntersection(i, j));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn signed_area(&self) -> f64 {
        match self {
            OuterBoundary::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            OuterBoundary::Polygon { vertices } => {
                let n = vertices.len();
                0.5 * (0..n)
                    .map(|i| cross(vertices[i], vertices[(i + 1) % n]))
                    .sum::<f64>()
            }
        }
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn contains(&self, p: Point) -> bool {
        match self {
            OuterBoundary::Disk { center, radius } => dist(p, *center) < *radius,
            OuterBoundary::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Unsigned distance from `p` to the boundary curve.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        match self {
            OuterBoundary::Disk { center, radius } => (dist(p, *center) - radius).abs(),
            OuterBoundary::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| segment_distance(p, vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            OuterBoundary::Disk { radius, .. } => 2.0 * radius,
            OuterBoundary::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for a in vertices {
                    for b in vertices {
                        d = d.max(dist(*a, *b));
                    }
                }
                d
            }
        }
    }

    /// Distance from `origin` along the direction `theta` to the boundary.
    /// Well defined when the region is star-shaped with respect to `origin`.
    pub fn radial_extent(&self, origin: Point, theta: f64) -> f64 {
        let d = [theta.cos(), theta.sin()];
        match self {
            OuterBoundary::Disk { center, radius } => {
                let oc = sub(origin, *center);
                let b = dot(d, oc);
                let c = dot(oc, oc) - radius * radius;
                -b + (b * b - c).max(0.0).sqrt()
            }
            OuterBoundary::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let a = sub(vertices[i], origin);
                    let e = sub(vertices[(i + 1) % n], vertices[i]);
                    let den = cross(d, e);
                    if den.abs() < 1e-300 {
                        continue;
                    }
                    let t = cross(a, e) / den;
                    let s = cross(a, d) / den;
                    if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
                        best = best.min(t);
                    }
                }
                best
            }
        }
    }

    /// Whether every boundary point is visible from `origin`.
    pub fn is_star_shaped_about(&self, origin: Point) -> bool {
        match self {
            OuterBoundary::Disk { .. } => self.contains(origin),
            OuterBoundary::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    cross(sub(vertices[i], origin), sub(vertices[(i + 1) % n], origin)) > 0.0
                })
            }
        }
    }

    /// Polar angles of the polygon corners seen from `origin`, in `[0, 2π)`.
    pub fn corner_angles(&self, origin: Point) -> Vec<f64> {
        match self {
            OuterBoundary::Disk { .. } => Vec::new(),
            OuterBoundary::Polygon { vertices } => vertices
                .iter()
                .map(|v| {
                    let d = sub(*v, origin);
                    d[1].atan2(d[0]).rem_euclid(std::f64::consts::TAU)
                })
                .collect(),
        }
    }

    /// Checks invariance under rotation by `π/κ` about `center`.
    pub fn check_symmetry(&self, center: Point, kappa: u32) -> Result<()> {
        let tol = 1e-9 * self.diameter();
        let angle = std::f64::consts::PI / kappa as f64;
        match self {
            OuterBoundary::Disk { center: c, .. } => {
                if dist(*c, center) > tol {
                    return Err(Error::NotSymmetric {
                        kappa,
                        detail: "disk is not concentric with the hole".into(),
                    });
                }
            }
            OuterBoundary::Polygon { vertices } => {
                for v in vertices {
                    let r = rotate_about(*v, center, angle);
                    if !vertices.iter().any(|w| dist(*w, r) <= tol) {
                        return Err(Error::NotSymmetric {
                            kappa,
                            detail: format!("rotated vertex ({:.6}, {:.6}) has no match", r[0], r[1]),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            OuterBoundary::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            OuterBoundary::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }
}

/// Ω with a round hole `B(ξ, ε)` removed, optionally κ-symmetric about ξ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiercedDomainSpec {
    pub outer: OuterBoundary,
    pub hole_center: Point,
    pub hole_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_order: Option<u32>,
}

impl PiercedDomainSpec {
    pub fn new(
        outer: OuterBoundary,
        hole_center: Point,
        hole_radius: f64,
        symmetry_order: Option<u32>,
    ) -> Result<Self> {
        let spec = PiercedDomainSpec {
            outer,
            hole_center,
            hole_radius,
            symmetry_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit disk pierced at its center.
    pub fn centered_unit_disk(epsilon: f64, kappa: Option<u32>) -> Result<Self> {
        Self::new(OuterBoundary::unit_disk(), [0.0, 0.0], epsilon, kappa)
    }

    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        if !(self.hole_radius.is_finite() && self.hole_radius > 0.0) {
            return Err(Error::param("hole_radius", format!("{} is not positive", self.hole_radius)));
        }
        if !self.outer.contains(self.hole_center) {
            return Err(Error::HoleExitsDomain {
                radius: self.hole_radius,
                distance: 0.0,
            });
        }
        let d = self.outer.distance_to_boundary(self.hole_center);
        if self.hole_radius >= d {
            return Err(Error::HoleExitsDomain {
                radius: self.hole_radius,
                distance: d,
            });
        }
        if let Some(k) = self.symmetry_order {
            if k == 0 {
                return Err(Error::param("symmetry_order", "must be positive"));
            }
            self.outer.check_symmetry(self.hole_center, k)?;
        }
        Ok(())
    }

    pub fn distance_to_outer(&self) -> f64 {
        self.outer.distance_to_boundary(self.hole_center)
    }

    pub fn area(&self) -> f64 {
        self.outer.area() - std::f64::consts::PI * self.hole_radius * self.hole_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> OuterBoundary {
        OuterBoundary::Polygon {
            vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        }
    }

    #[test]
    fn hole_exiting_domain_is_rejected() {
        let err = PiercedDomainSpec::new(OuterBoundary::unit_disk(), [0.5, 0.0], 0.6, None).unwrap_err();
        assert!(matches!(err, Error::HoleExitsDomain { .. }), "{err}");
        assert!(err.to_string().contains("hole exits domain"));
    }

    #[test]
    fn self_intersecting_polygon_is_rejected() {
        let bowtie = OuterBoundary::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        };
        // a bow-tie has zero signed area, so orientation fails first; use a ccw figure-eight
        assert!(bowtie.validate().is_err());
        let crossed = OuterBoundary::Polygon {
            vertices: vec![[0.0, 0.0], [3.0, 0.0], [3.0, 2.0], [1.0, -1.0], [0.0, 2.0]],
        };
        assert!(matches!(crossed.validate(), Err(Error::SelfIntersection(..))));
    }

    #[test]
    fn square_symmetry_orders() {
        let sq = square();
        assert!(sq.check_symmetry([0.0, 0.0], 2).is_ok());
        assert!(sq.check_symmetry([0.0, 0.0], 1).is_ok());
        assert!(sq.check_symmetry([0.0, 0.0], 3).is_err());
        assert!(sq.check_symmetry([0.1, 0.0], 2).is_err());
        let off = OuterBoundary::Disk { center: [0.2, 0.0], radius: 1.0 };
        assert!(off.check_symmetry([0.0, 0.0], 1).is_err());
    }

    #[test]
    fn radial_extent_matches_geometry() {
        let sq = square();
        assert!((sq.radial_extent([0.0, 0.0], 0.0) - 1.0).abs() < 1e-14);
        assert!((sq.radial_extent([0.0, 0.0], std::f64::consts::FRAC_PI_4) - 2f64.sqrt()).abs() < 1e-12);
        let d = OuterBoundary::unit_disk();
        assert!((d.radial_extent([0.5, 0.0], 0.0) - 0.5).abs() < 1e-14);
        assert!((d.radial_extent([0.5, 0.0], std::f64::consts::PI) - 1.5).abs() < 1e-14);
        assert!(sq.is_star_shaped_about([0.3, -0.2]));
    }

    #[test]
    fn distances_and_containment() {
        let sq = square();
        assert!(sq.contains([0.9, 0.9]));
        assert!(!sq.contains([1.1, 0.0]));
        assert!((sq.distance_to_boundary([0.5, 0.0]) - 0.5).abs() < 1e-14);
        assert!((sq.area() - 4.0).abs() < 1e-14);
    }
}
