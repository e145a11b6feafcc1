//! Symmetric Gaussian quadrature on triangles.
//!
//! Points are barycentric triples and weights are normalized to sum to one,
//! so `∫_T f ≈ |T| Σ w_q f(x_q)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

struct Builder {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    fn centroid(mut self, w: f64) -> Self {
        let t = 1.0 / 3.0;
        self.points.push([t, t, t]);
        self.weights.push(w);
        self
    }

    /// Orbit of `(a, a, 1-2a)`.
    fn orbit3(mut self, a: f64, w: f64) -> Self {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
        self
    }

    /// Orbit of `(a, b, 1-a-b)` with distinct entries.
    fn orbit6(mut self, a: f64, b: f64, w: f64) -> Self {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
        self
    }

    fn build(self, degree: usize) -> TriangleRule {
        TriangleRule {
            degree,
            points: self.points,
            weights: self.weights,
        }
    }
}

fn make(degree: usize) -> TriangleRule {
    match degree {
        1 => Builder::new().centroid(1.0).build(1),
        2 => Builder::new().orbit3(1.0 / 6.0, 1.0 / 3.0).build(2),
        3 => Builder::new()
            .centroid(-27.0 / 48.0)
            .orbit3(0.2, 25.0 / 48.0)
            .build(3),
        4 => Builder::new()
            .orbit3(0.445_948_490_915_965, 0.223_381_589_678_011)
            .orbit3(0.091_576_213_509_771, 0.109_951_743_655_322)
            .build(4),
        5 => {
            let s = 15f64.sqrt();
            Builder::new()
                .centroid(9.0 / 40.0)
                .orbit3((6.0 - s) / 21.0, (155.0 - s) / 1200.0)
                .orbit3((6.0 + s) / 21.0, (155.0 + s) / 1200.0)
                .build(5)
        }
        6 => Builder::new()
            .orbit3(0.249_286_745_170_910, 0.116_786_275_726_379)
            .orbit3(0.063_089_014_491_502, 0.050_844_906_370_207)
            .orbit6(0.053_145_049_844_817, 0.310_352_451_033_784, 0.082_851_075_618_374)
            .build(6),
        7 => Builder::new()
            .centroid(-0.149_570_044_467_682)
            .orbit3(0.260_345_966_079_040, 0.175_615_257_433_208)
            .orbit3(0.065_130_102_902_216, 0.053_347_235_608_838)
            .orbit6(0.048_690_315_425_316, 0.312_865_496_004_874, 0.077_113_760_890_257)
            .build(7),
        _ => unreachable!(),
    }
}

/// Rule exact for polynomials of total degree `order`, `1 ≤ order ≤ 7`.
pub fn triangle_rule(order: usize) -> Result<&'static TriangleRule> {
    static RULES: [OnceLock<TriangleRule>; 7] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    if !(1..=7).contains(&order) {
        return Err(Error::param("order", format!("quadrature order {order} not in 1..=7")));
    }
    Ok(RULES[order - 1].get_or_init(|| make(order)))
}
