//! P1 Galerkin discretization of `-div(A∇u) + σu = f` with homogeneous
//! Dirichlet data on a rectangle.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, Rectangle};
use crate::quadrature::{map_to_physical, TriangleRule};
use crate::sparse::{conjugate_gradient, CgOptions, CgOutcome, CsrMatrix};

pub const ASSEMBLY_QUAD_ORDER: usize = 4;
pub const ERROR_QUAD_ORDER: usize = 6;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Constant symmetric positive definite 2×2 diffusion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    m: [[f64; 2]; 2],
    mu1: f64,
    mu2: f64,
}

impl Diffusion {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("diffusion matrix has non-finite entries".into()));
        }
        if (m[0][1] - m[1][0]).abs() > 1e-14 {
            return Err(Error::InvalidArgument("diffusion matrix is not symmetric".into()));
        }
        let off = 0.5 * (m[0][1] + m[1][0]);
        let m = [[m[0][0], off], [off, m[1][1]]];
        let mean = 0.5 * (m[0][0] + m[1][1]);
        let rad = (0.25 * (m[0][0] - m[1][1]).powi(2) + off * off).sqrt();
        let (mu1, mu2) = (mean - rad, mean + rad);
        if mu1 <= 0.0 {
            return Err(Error::InvalidArgument(format!("diffusion matrix is not positive definite (mu1 = {mu1})")));
        }
        Ok(Diffusion { m, mu1, mu2 })
    }

    pub fn identity() -> Self {
        Diffusion { m: [[1.0, 0.0], [0.0, 1.0]], mu1: 1.0, mu2: 1.0 }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.m
    }

    /// Extreme eigenvalues `(μ1, μ2)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.mu1, self.mu2)
    }

    pub fn is_identity(&self) -> bool {
        self.m == [[1.0, 0.0], [0.0, 1.0]]
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    pub fn solve(&self, v: [f64; 2]) -> [f64; 2] {
        let det = self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0];
        [(self.m[1][1] * v[0] - self.m[0][1] * v[1]) / det, (self.m[0][0] * v[1] - self.m[1][0] * v[0]) / det]
    }

    /// `A v · v`
    pub fn energy(&self, v: [f64; 2]) -> f64 {
        let av = self.apply(v);
        av[0] * v[0] + av[1] * v[1]
    }

    /// `A⁻¹ w · w`
    pub fn inverse_energy(&self, w: [f64; 2]) -> f64 {
        let s = self.solve(w);
        s[0] * w[0] + s[1] * w[1]
    }
}

/// Problem data: constant `A`, constant `σ ≥ 0`, analytic source `f`, rectangle.
#[derive(Clone)]
pub struct ProblemSpec {
    pub diffusion: Diffusion,
    pub sigma: f64,
    pub source: ScalarFn,
    pub domain: Rectangle,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("diffusion", &self.diffusion)
            .field("sigma", &self.sigma)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(diffusion: Diffusion, sigma: f64, source: ScalarFn, domain: Rectangle) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(ProblemSpec { diffusion, sigma, source, domain })
    }

    pub fn f(&self, x: Point) -> f64 {
        (self.source)(x)
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        ProblemSpec::new(self.diffusion, sigma, self.source.clone(), self.domain)
    }
}

/// Continuous piecewise-linear scalar field vanishing on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FeScalarField {
    mesh: Arc<Mesh>,
    coeffs: Vec<f64>,
}

impl FeScalarField {
    pub fn new(mesh: Arc<Mesh>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                mesh.num_nodes(),
                coeffs.len()
            )));
        }
        if let Some(k) = (0..coeffs.len()).find(|&k| mesh.is_boundary(k) && coeffs[k] != 0.0) {
            return Err(Error::InvalidArgument(format!("boundary node {k} carries a nonzero value")));
        }
        Ok(FeScalarField { mesh, coeffs })
    }

    /// Nodal values without the Dirichlet check, for test functions and
    /// post-processing of fields that need not vanish on the boundary.
    pub fn unconstrained(mesh: Arc<Mesh>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                mesh.num_nodes(),
                coeffs.len()
            )));
        }
        Ok(FeScalarField { mesh, coeffs })
    }

    pub fn zero(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_nodes();
        FeScalarField { mesh, coeffs: vec![0.0; n] }
    }

    /// Nodal interpolant of `g`, with boundary values forced to zero.
    pub fn interpolate(mesh: Arc<Mesh>, g: impl Fn(Point) -> f64) -> Self {
        let coeffs =
            mesh.nodes().iter().enumerate().map(|(k, p)| if mesh.is_boundary(k) { 0.0 } else { g(*p) }).collect();
        FeScalarField { mesh, coeffs }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        FeScalarField { mesh: self.mesh.clone(), coeffs: self.coeffs.iter().map(|c| c * lambda).collect() }
    }

    pub fn value(&self, t: usize, bary: &[f64; 3]) -> f64 {
        let tri = self.mesh.triangles()[t];
        (0..3).map(|k| self.coeffs[tri[k]] * bary[k]).sum()
    }

    pub fn gradient_on(&self, t: usize) -> [f64; 2] {
        let tri = self.mesh.triangles()[t];
        let geo = crate::mesh::ElementGeometry::from_vertices(self.mesh.vertices(t));
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += self.coeffs[tri[k]] * geo.grads[k][0];
            g[1] += self.coeffs[tri[k]] * geo.grads[k][1];
        }
        g
    }

    /// One value per line, for debugging.
    pub fn to_text(&self) -> String {
        self.coeffs.iter().map(|c| format!("{c:?}\n")).collect()
    }
}

/// Continuous piecewise-linear vector field (two nodal component arrays).
#[derive(Debug, Clone, PartialEq)]
pub struct FeVectorField {
    mesh: Arc<Mesh>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl FeVectorField {
    pub fn new(mesh: Arc<Mesh>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != mesh.num_nodes() || y.len() != mesh.num_nodes() {
            return Err(Error::InvalidArgument("vector field component length mismatch".into()));
        }
        Ok(FeVectorField { mesh, x, y })
    }

    pub fn interpolate(mesh: Arc<Mesh>, g: impl Fn(Point) -> [f64; 2]) -> Self {
        let (x, y) = mesh.nodes().iter().map(|p| g(*p)).map(|v| (v[0], v[1])).unzip();
        FeVectorField { mesh, x, y }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn node_value(&self, k: usize) -> [f64; 2] {
        [self.x[k], self.y[k]]
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        FeVectorField {
            mesh: self.mesh.clone(),
            x: self.x.iter().map(|c| c * lambda).collect(),
            y: self.y.iter().map(|c| c * lambda).collect(),
        }
    }

    pub fn value(&self, t: usize, bary: &[f64; 3]) -> [f64; 2] {
        let tri = self.mesh.triangles()[t];
        let mut v = [0.0; 2];
        for k in 0..3 {
            v[0] += self.x[tri[k]] * bary[k];
            v[1] += self.y[tri[k]] * bary[k];
        }
        v
    }

    pub fn to_text(&self) -> String {
        self.x.iter().zip(&self.y).map(|(a, b)| format!("{a:?} {b:?}\n")).collect()
    }
}

/// Stiffness plus `σ`·mass on interior nodes, with the matching load vector.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub load: Vec<f64>,
    /// Node index of each unknown.
    pub interior: Vec<usize>,
    pub mesh: Arc<Mesh>,
    pub quad_order: usize,
}

pub fn local_mass(area: f64) -> [[f64; 3]; 3] {
    let mut m = [[area / 12.0; 3]; 3];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = area / 6.0;
    }
    m
}

pub fn local_stiffness(geo: &crate::mesh::ElementGeometry, a: &Diffusion) -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        let agi = a.apply(geo.grads[i]);
        for j in 0..3 {
            k[i][j] = geo.area * (agi[0] * geo.grads[j][0] + agi[1] * geo.grads[j][1]);
        }
    }
    k
}

pub fn assemble(mesh: &Arc<Mesh>, problem: &ProblemSpec) -> Result<SparseSystem> {
    assemble_with_order(mesh, problem, ASSEMBLY_QUAD_ORDER)
}

pub fn assemble_with_order(mesh: &Arc<Mesh>, problem: &ProblemSpec, quad_order: usize) -> Result<SparseSystem> {
    if mesh.domain() != problem.domain {
        return Err(Error::DomainMismatch);
    }
    let rule = TriangleRule::new(quad_order)?;
    let mut dof = vec![usize::MAX; mesh.num_nodes()];
    let mut interior = Vec::new();
    for k in 0..mesh.num_nodes() {
        if !mesh.is_boundary(k) {
            dof[k] = interior.len();
            interior.push(k);
        }
    }

    let nodal = nodal_load(mesh, &rule, |x| problem.f(x));
    let load = interior.iter().map(|&k| nodal[k]).collect();
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = crate::mesh::ElementGeometry::from_vertices(mesh.vertices(t));
        let stiff = local_stiffness(&geo, &problem.diffusion);
        let mass = local_mass(geo.area);
        for i in 0..3 {
            let di = dof[tri[i]];
            if di == usize::MAX {
                continue;
            }
            for j in 0..3 {
                let dj = dof[tri[j]];
                if dj != usize::MAX {
                    triplets.push((di, dj, stiff[i][j] + problem.sigma * mass[i][j]));
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(interior.len(), triplets);
    Ok(SparseSystem { matrix, load, interior, mesh: mesh.clone(), quad_order })
}

/// Interior-node mass matrix `∫ φ_i φ_j`, ordered like [`SparseSystem::interior`].
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut dof = vec![usize::MAX; mesh.num_nodes()];
    let mut count = 0;
    for (k, d) in dof.iter_mut().enumerate() {
        if !mesh.is_boundary(k) {
            *d = count;
            count += 1;
        }
    }
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mass = local_mass(crate::mesh::signed_area(mesh.vertices(t)));
        for i in 0..3 {
            for j in 0..3 {
                let (di, dj) = (dof[tri[i]], dof[tri[j]]);
                if di != usize::MAX && dj != usize::MAX {
                    triplets.push((di, dj, mass[i][j]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(count, triplets)
}

/// `∫ f φ_k` for every node `k`, boundary nodes included.
pub fn nodal_load(mesh: &Mesh, rule: &TriangleRule, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let verts = mesh.vertices(t);
        let area = crate::mesh::signed_area(verts);
        for (b, w) in rule.points() {
            let fx = f(map_to_physical(&verts, b));
            for k in 0..3 {
                load[tri[k]] += w * area * fx * b[k];
            }
        }
    }
    load
}

/// CG solve with relative residual `rel_tol`; Dirichlet nodes are set to zero.
pub fn solve(system: &SparseSystem, rel_tol: f64) -> Result<FeScalarField> {
    solve_with(system, CgOptions { rel_tol, ..Default::default() }).map(|(u, _)| u)
}

pub fn solve_with(system: &SparseSystem, opts: CgOptions) -> Result<(FeScalarField, CgOutcome)> {
    let outcome = conjugate_gradient(&system.matrix, &system.load, opts)?;
    let mut coeffs = vec![0.0; system.mesh.num_nodes()];
    for (d, &node) in system.interior.iter().enumerate() {
        coeffs[node] = outcome.x[d];
    }
    Ok((FeScalarField { mesh: system.mesh.clone(), coeffs }, outcome))
}

/// Exact gradient of the P1 field, one vector per triangle.
pub fn gradient(field: &FeScalarField) -> Vec<[f64; 2]> {
    (0..field.mesh.num_triangles()).map(|t| field.gradient_on(t)).collect()
}

/// Integrate a pointwise function over the mesh with a triangle rule of `quad_order`.
pub fn integrate(integrand: impl Fn(Point) -> f64, mesh: &Mesh, quad_order: usize) -> Result<f64> {
    integrate_elementwise(mesh, quad_order, |_, _, x| integrand(x))
}

/// Integrate `g(t, bary, x)` where `t` is the triangle, `bary` the barycentric
/// coordinates and `x` the physical point.
pub fn integrate_elementwise(
    mesh: &Mesh,
    quad_order: usize,
    mut g: impl FnMut(usize, &[f64; 3], Point) -> f64,
) -> Result<f64> {
    let rule = TriangleRule::new(quad_order)?;
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let verts = mesh.vertices(t);
        let area = crate::mesh::signed_area(verts);
        let mut local = 0.0;
        for (b, w) in rule.points() {
            local += w * g(t, b, map_to_physical(&verts, b));
        }
        total += area * local;
    }
    Ok(total)
}
