//! Gauss rules on intervals and triangles.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules, so every order has strictly positive weights and interior points.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 7;

/// Gauss–Legendre nodes and weights on `[0, 1]`, exact for degree `2m - 1`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "gauss_legendre needs at least one point");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for k in 0..m {
        // Tricomi initial guess followed by Newton on P_m
        let mut x = (PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        dp = if d != 0.0 { d } else { dp };
        // map [-1, 1] -> [0, 1], ascending order
        nodes[m - 1 - k] = 0.5 * (x + 1.0);
        weights[m - 1 - k] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on a triangle in barycentric coordinates; weights sum to 1
/// and are scaled by the element area at use.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub order: usize,
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Rule integrating polynomials of total degree `order` exactly.
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::UnsupportedQuadratureOrder(order));
        }
        // the collapse Jacobian (1 - s) raises the degree in s by one
        let m = (order + 3) / 2;
        let (g, w) = gauss_legendre(m);
        let mut bary = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (s, ws) in g.iter().zip(&w) {
            for (t, wt) in g.iter().zip(&w) {
                let xi = *s;
                let eta = t * (1.0 - s);
                bary.push([1.0 - xi - eta, xi, eta]);
                weights.push(2.0 * ws * wt * (1.0 - s));
            }
        }
        Ok(TriangleRule { order, bary, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (&[f64; 3], f64)> {
        self.bary.iter().zip(self.weights.iter().copied())
    }
}

pub fn map_to_physical(vertices: &[[f64; 2]; 3], bary: &[f64; 3]) -> [f64; 2] {
    [
        bary[0] * vertices[0][0] + bary[1] * vertices[1][0] + bary[2] * vertices[2][0],
        bary[0] * vertices[0][1] + bary[1] * vertices[1][1] + bary[2] * vertices[2][1],
    ]
}
