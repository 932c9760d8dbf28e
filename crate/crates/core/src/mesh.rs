//! Structured triangulations of axis-aligned rectangles.
//!
//! Nodes are numbered lexicographically with `y` as the outer index, so node
//! `(i, j)` of an `n × n` grid has index `j * (n + 1) + i`. Every cell is split
//! along its lower-left to upper-right diagonal.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rectangle {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let r = Rectangle { x0, x1, y0, y1 };
        if !(r.width() > 0.0 && r.height() > 0.0) || !r.width().is_finite() || !r.height().is_finite() {
            return Err(Error::InvalidArgument(format!("degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]")));
        }
        Ok(r)
    }

    pub const fn unit_square() -> Self {
        Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Smallest Dirichlet eigenvalue of `-Δ` on this rectangle.
    pub fn dirichlet_lambda1(&self) -> f64 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        pi2 * (1.0 / (self.width() * self.width()) + 1.0 / (self.height() * self.height()))
    }
}

/// Area and constant gradients of the three barycentric hat functions of a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn from_vertices(p: [Point; 3]) -> Self {
        let signed = signed_area(p);
        let inv = 1.0 / (2.0 * signed);
        let mut grads = [[0.0; 2]; 3];
        for (k, g) in grads.iter_mut().enumerate() {
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            *g = [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv];
        }
        ElementGeometry { area: signed.abs(), grads }
    }
}

pub fn signed_area(p: [Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Barycentric coordinates of `x` with respect to the triangle `p`.
pub fn barycentric(p: &[Point; 3], x: Point) -> [f64; 3] {
    let total = signed_area(*p);
    let l1 = signed_area([p[0], x, p[2]]) / total;
    let l2 = signed_area([p[0], p[1], x]) / total;
    [1.0 - l1 - l2, l1, l2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_mask: Vec<bool>,
    h: f64,
    domain: Rectangle,
    n: usize,
}

/// Uniform `n × n` grid on `domain`, each cell split into two counterclockwise triangles.
pub fn build_uniform_mesh(n: usize, domain: Rectangle) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("subdivision count must be at least 1".into()));
    }
    let domain = Rectangle::new(domain.x0, domain.x1, domain.y0, domain.y1)?;
    let dx = domain.width() / n as f64;
    let dy = domain.height() / n as f64;
    let stride = n + 1;

    let mut nodes = Vec::with_capacity(stride * stride);
    let mut boundary_mask = Vec::with_capacity(stride * stride);
    for j in 0..=n {
        // endpoints are pinned so border nodes sit exactly on the rectangle
        let y = if j == n { domain.y1 } else { domain.y0 + j as f64 * dy };
        for i in 0..=n {
            let x = if i == n { domain.x1 } else { domain.x0 + i as f64 * dx };
            nodes.push([x, y]);
            boundary_mask.push(i == 0 || j == 0 || i == n || j == n);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = j * stride + i;
            let b = a + 1;
            let c = a + stride + 1;
            let d = a + stride;
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    Ok(Mesh { nodes, triangles, boundary_mask, h: dx.hypot(dy), domain, n })
}

impl Mesh {
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_mask[node]
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> Rectangle {
        self.domain
    }

    /// Subdivisions per side.
    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn element_geometry(&self, t: usize) -> Result<ElementGeometry> {
        if t >= self.triangles.len() {
            return Err(Error::IndexOutOfRange { index: t, len: self.triangles.len() });
        }
        Ok(ElementGeometry::from_vertices(self.vertices(t)))
    }

    /// Triangle of the structured grid containing `p` (points outside are clamped).
    pub fn locate(&self, p: Point) -> usize {
        let d = self.domain;
        let n = self.n;
        let fx = (p[0] - d.x0) / d.width() * n as f64;
        let fy = (p[1] - d.y0) / d.height() * n as f64;
        let i = (fx.floor().max(0.0) as usize).min(n - 1);
        let j = (fy.floor().max(0.0) as usize).min(n - 1);
        let (lx, ly) = (fx - i as f64, fy - j as f64);
        let cell = j * n + i;
        if ly <= lx {
            2 * cell
        } else {
            2 * cell + 1
        }
    }

    /// Plain-text dump: a header line, node coordinates, then 0-based triangle indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {} triangles {} h {:?}", self.num_nodes(), self.num_triangles(), self.h);
        for p in &self.nodes {
            let _ = writeln!(out, "{:?} {:?}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}
