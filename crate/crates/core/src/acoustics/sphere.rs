use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Polynomial degrees with a rule available. The first three are octahedral
/// Lebedev rules, the rest are Gauss-Legendre × uniform-azimuth product rules.
pub const SUPPORTED_ORDERS: [usize; 9] = [3, 5, 7, 15, 31, 63, 127, 255, 511];

/// Nodes and weights on the unit sphere; weights sum to 4π.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub degree: usize,
    pub nodes: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vector3<f64>) -> f64) -> f64 {
        crate::linalg::compensated_sum(self.nodes.iter().zip(&self.weights).map(|(k, w)| w * f(k)))
    }
}

pub fn sphere_quadrature(order: usize) -> Result<SphereRule> {
    match order {
        3 | 5 | 7 => Ok(lebedev(order)),
        d if SUPPORTED_ORDERS.contains(&d) => Ok(product_rule(d.div_ceil(2), d)),
        requested => Err(Error::UnsupportedOrder { requested, supported: SUPPORTED_ORDERS.to_vec() }),
    }
}

fn octahedron_vertices() -> Vec<Vector3<f64>> {
    let mut v = Vec::with_capacity(6);
    for axis in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = Vector3::zeros();
            p[axis] = s;
            v.push(p);
        }
    }
    v
}

fn edge_midpoints() -> Vec<Vector3<f64>> {
    let a = 0.5f64.sqrt();
    let mut v = Vec::with_capacity(12);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for si in [a, -a] {
            for sj in [a, -a] {
                let mut p = Vector3::zeros();
                p[i] = si;
                p[j] = sj;
                v.push(p);
            }
        }
    }
    v
}

fn cube_corners() -> Vec<Vector3<f64>> {
    let a = 1.0 / 3f64.sqrt();
    let mut v = Vec::with_capacity(8);
    for sx in [a, -a] {
        for sy in [a, -a] {
            for sz in [a, -a] {
                v.push(Vector3::new(sx, sy, sz));
            }
        }
    }
    v
}

fn lebedev(degree: usize) -> SphereRule {
    // (orbit, weight normalised to a unit total)
    let orbits: Vec<(Vec<Vector3<f64>>, f64)> = match degree {
        3 => vec![(octahedron_vertices(), 1.0 / 6.0)],
        5 => vec![(octahedron_vertices(), 1.0 / 15.0), (cube_corners(), 3.0 / 40.0)],
        _ => vec![
            (octahedron_vertices(), 1.0 / 21.0),
            (edge_midpoints(), 4.0 / 105.0),
            (cube_corners(), 9.0 / 280.0),
        ],
    };
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (points, w) in orbits {
        weights.extend(std::iter::repeat_n(4.0 * PI * w, points.len()));
        nodes.extend(points);
    }
    SphereRule { degree, nodes, weights }
}

fn product_rule(n: usize, degree: usize) -> SphereRule {
    let (x, w) = gauss_legendre(n);
    let n_phi = 2 * n;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n * n_phi);
    let mut weights = Vec::with_capacity(n * n_phi);
    for (&ct, &wt) in x.iter().zip(&w) {
        let st = (1.0 - ct * ct).sqrt();
        for p in 0..n_phi {
            let (sp, cp) = (p as f64 * dphi).sin_cos();
            nodes.push(Vector3::new(st * cp, st * sp, ct));
            weights.push(wt * dphi);
        }
    }
    SphereRule { degree, nodes, weights }
}
