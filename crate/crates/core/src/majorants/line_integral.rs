//! Majorant built from line integrals of the residual along coordinate
//! directions, for `-Δu = f` on an axis-aligned rectangle.
//!
//! `K_k(x) = ∫ β_k (f − div z)` from the left (k = 1) or lower (k = 2) edge to
//! `x` along direction `k`, with `β₂ = 1 − β₁`, and
//! `‖∇(v−u)‖ ≤ ‖∇v + z‖ + ‖K_1‖ + ‖K_2‖`.
//!
//! The residual jumps across the cell diagonals (the divergence of a P1 flux
//! is piecewise constant), so each line integral is split at every diagonal
//! crossing and integrated with 4-point Gauss–Legendre per piece.

use super::{Estimator, MajorantInput, MajorantReport};
use crate::error::{Error, Result};
use crate::fem::integrate_elementwise;
use crate::mesh::{barycentric, Point};
use crate::quadrature::gauss_legendre;

const LINE_POINTS: usize = 4;

struct LineWalker<'a, B> {
    input: &'a MajorantInput<'a>,
    beta1: &'a B,
    gl: (Vec<f64>, Vec<f64>),
}

impl<'a, B: Fn(Point) -> f64> LineWalker<'a, B> {
    fn integrand(&self, t: usize, x: Point, dir: usize) -> f64 {
        let verts = self.input.mesh.vertices(t);
        let bary = barycentric(&verts, x);
        let b1 = (self.beta1)(x);
        let beta = if dir == 0 { b1 } else { 1.0 - b1 };
        let p = self.input.problem;
        beta * (p.f(x) - self.input.z.divergence(t, &bary, x))
    }

    /// Integral along direction `dir` over `[s0, s1]` at fixed cross coordinate
    /// `c`, entirely inside triangle `t`.
    fn piece(&self, t: usize, dir: usize, c: f64, s0: f64, s1: f64) -> f64 {
        if s1 <= s0 {
            return 0.0;
        }
        let (nodes, weights) = &self.gl;
        let len = s1 - s0;
        nodes
            .iter()
            .zip(weights)
            .map(|(s, w)| {
                let along = s0 + s * len;
                let x = if dir == 0 { [along, c] } else { [c, along] };
                w * len * self.integrand(t, x, dir)
            })
            .sum()
    }

    /// `K_dir(p)`; `p` lies in the grid cell `(ci, cj)`.
    fn k_value(&self, p: Point, ci: usize, cj: usize, dir: usize) -> f64 {
        let mesh = self.input.mesh;
        let n = mesh.subdivisions();
        let d = mesh.domain();
        let dx = d.width() / n as f64;
        let dy = d.height() / n as f64;
        let mut total = 0.0;
        if dir == 0 {
            let (y, y0) = (p[1], d.y0 + cj as f64 * dy);
            for i in 0..=ci {
                let xa = d.x0 + i as f64 * dx;
                let xb = if i == ci { p[0] } else { xa + dx };
                let cell = cj * n + i;
                // right of the diagonal is the lower triangle
                let xd = xa + (y - y0) * dx / dy;
                total += self.piece(2 * cell + 1, 0, y, xa, xb.min(xd));
                total += self.piece(2 * cell, 0, y, xa.max(xd), xb);
            }
        } else {
            let (x, x0) = (p[0], d.x0 + ci as f64 * dx);
            for j in 0..=cj {
                let ya = d.y0 + j as f64 * dy;
                let yb = if j == cj { p[1] } else { ya + dy };
                let cell = j * n + ci;
                // below the diagonal is the lower triangle
                let yd = ya + (x - x0) * dy / dx;
                total += self.piece(2 * cell, 1, x, ya, yb.min(yd));
                total += self.piece(2 * cell + 1, 1, x, ya.max(yd), yb);
            }
        }
        total
    }
}

/// `(‖K_1‖, ‖K_2‖)` in `L2(Ω)`.
pub fn line_integral_terms(input: &MajorantInput<'_>, beta1: &impl Fn(Point) -> f64) -> Result<(f64, f64)> {
    let walker = LineWalker { input, beta1, gl: gauss_legendre(LINE_POINTS) };
    let n = input.mesh.subdivisions();
    let mut norms = [0.0; 2];
    for (dir, norm) in norms.iter_mut().enumerate() {
        *norm = integrate_elementwise(input.mesh, input.quad_order, |t, _, x| {
            let cell = t / 2;
            walker.k_value(x, cell % n, cell / n, dir).powi(2)
        })?
        .sqrt();
    }
    Ok((norms[0], norms[1]))
}

/// `(‖∇v + z‖ + ‖K_1‖ + ‖K_2‖)²`, a bound for `‖∇(v−u)‖²`.
pub fn majorant_line_integral(input: &MajorantInput<'_>, beta1: impl Fn(Point) -> f64) -> Result<MajorantReport> {
    let p = input.problem;
    if p.sigma != 0.0 || !p.diffusion.is_identity() {
        return Err(Error::Scope("line_integral requires A = I and sigma = 0".into()));
    }
    if input.mesh.domain() != p.domain {
        return Err(Error::Scope("line_integral requires the mesh to cover the problem rectangle".into()));
    }
    let terms = input.terms()?;
    let (k1, k2) = line_integral_terms(input, &beta1)?;
    let a = terms.flux.sqrt();
    let total = (a + k1 + k2).powi(2);
    let mut report = MajorantReport::new(Estimator::LineIntegral, terms, total);
    report.residual_term = (k1 + k2).powi(2);
    report.notes.push("bounds ||grad(v-u)||^2".into());
    report.notes.push(format!("||K_1||={k1:?} ||K_2||={k2:?}"));
    Ok(report)
}
