//! Manufactured solutions, true errors by quadrature, rate fits and the
//! discrete Dirichlet eigenvalue.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble, assemble_mass, assemble_with_order, integrate_elementwise, solve_with, Diffusion, FeScalarField,
    FeVectorField, ProblemSpec, ScalarFn, VectorFn, ASSEMBLY_QUAD_ORDER, ERROR_QUAD_ORDER,
};
use crate::majorants::{AnalyticFlux, AnalyticScalar, ErrorPair, MajorantReport};
use crate::mesh::{build_uniform_mesh, Mesh, Point, Rectangle};
use crate::recovery::{recover_flux, RecoveryConfig};
use crate::sparse::{conjugate_gradient, dot, CgOptions};

pub const CASE_NAMES: [&str; 3] = ["sinsin", "bubble", "aniso"];

/// Exact solution with its gradient and the induced problem data.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    pub problem: ProblemSpec,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase").field("name", &self.name).field("problem", &self.problem).finish()
    }
}

fn sinsin() -> (ScalarFn, VectorFn) {
    let u: ScalarFn = Arc::new(|x: Point| (PI * x[0]).sin() * (PI * x[1]).sin());
    let g: VectorFn =
        Arc::new(|x: Point| [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()]);
    (u, g)
}

pub fn manufactured(name: &str, sigma: f64) -> Result<ManufacturedCase> {
    let domain = Rectangle::unit_square();
    let (u, grad_u, diffusion, laplace_part): (ScalarFn, VectorFn, Diffusion, ScalarFn) = match name {
        "sinsin" => {
            let (u, g) = sinsin();
            let uu = u.clone();
            (u, g, Diffusion::identity(), Arc::new(move |x| 2.0 * PI * PI * uu(x)))
        }
        "bubble" => {
            let u: ScalarFn = Arc::new(|x: Point| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
            let g: VectorFn = Arc::new(|x: Point| {
                [(1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]), x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1])]
            });
            (u, g, Diffusion::identity(), Arc::new(|x: Point| 2.0 * (x[0] * (1.0 - x[0]) + x[1] * (1.0 - x[1]))))
        }
        "aniso" => {
            let (u, g) = sinsin();
            let a = Diffusion::new([[2.0, 0.5], [0.5, 1.0]])?;
            let m = a.matrix();
            let uu = u.clone();
            // -(a11 u_xx + 2 a12 u_xy + a22 u_yy) with u_xx = u_yy = -π²u, u_xy = π² cos cos
            let lp: ScalarFn = Arc::new(move |x: Point| {
                PI * PI * ((m[0][0] + m[1][1]) * uu(x) - 2.0 * m[0][1] * (PI * x[0]).cos() * (PI * x[1]).cos())
            });
            (u, g, a, lp)
        }
        other => return Err(Error::UnknownCase(other.to_string())),
    };
    let uu = u.clone();
    let source: ScalarFn = Arc::new(move |x| laplace_part(x) + sigma * uu(x));
    let problem = ProblemSpec::new(diffusion, sigma, source, domain)?;
    Ok(ManufacturedCase { name: name.to_string(), u, grad_u, problem })
}

impl ManufacturedCase {
    /// `u`, `f` scaled jointly by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let (u, g, f) = (self.u.clone(), self.grad_u.clone(), self.problem.source.clone());
        let mut problem = self.problem.clone();
        problem.source = Arc::new(move |x| lambda * f(x));
        ManufacturedCase {
            name: self.name.clone(),
            u: Arc::new(move |x| lambda * u(x)),
            grad_u: Arc::new(move |x| g(x).map(|c| lambda * c)),
            problem,
        }
    }

    pub fn exact_solution(&self) -> AnalyticScalar {
        AnalyticScalar { value: self.u.clone(), gradient: self.grad_u.clone() }
    }

    /// `z = -A∇u`, whose divergence is `f − σu`.
    pub fn exact_flux(&self) -> AnalyticFlux {
        let (g, a) = (self.grad_u.clone(), self.problem.diffusion);
        let (u, f, sigma) = (self.u.clone(), self.problem.source.clone(), self.problem.sigma);
        AnalyticFlux {
            value: Arc::new(move |x| a.apply(g(x)).map(|c| -c)),
            divergence: Arc::new(move |x| f(x) - sigma * u(x)),
        }
    }
}

/// Error norms of an approximation against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueError {
    /// `(‖e‖²_A + σ‖e‖²₀)^{1/2}`
    pub energy: f64,
    pub l2: f64,
    pub pair: ErrorPair,
}

pub fn true_error(case: &ManufacturedCase, u_fem: &FeScalarField) -> Result<TrueError> {
    let mesh = u_fem.mesh();
    let a = &case.problem.diffusion;
    let a_norm_sq = integrate_elementwise(mesh, ERROR_QUAD_ORDER, |t, _, x| {
        let gu = (case.grad_u)(x);
        let gh = u_fem.gradient_on(t);
        a.energy([gu[0] - gh[0], gu[1] - gh[1]])
    })?;
    let l2_sq = integrate_elementwise(mesh, ERROR_QUAD_ORDER, |t, b, x| ((case.u)(x) - u_fem.value(t, b)).powi(2))?;
    let energy = (a_norm_sq + case.problem.sigma * l2_sq).sqrt();
    Ok(TrueError { energy, l2: l2_sq.sqrt(), pair: ErrorPair { a_norm_sq, l2_sq } })
}

/// Least-squares slope of `log(value)` against `log(h)`.
pub fn convergence_rate(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!("rate fit needs at least 3 pairs, got {}", pairs.len())));
    }
    if pairs.iter().any(|&(h, v)| !(h > 0.0) || !(v > 0.0)) {
        return Err(Error::InvalidArgument("rate fit needs positive h and values".into()));
    }
    let logs: Vec<(f64, f64)> = pairs.iter().map(|&(h, v)| (h.ln(), v.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs distinct h values".into()));
    }
    Ok(sxy / sxx)
}

pub const LAMBDA1_TOL: f64 = 1e-8;

/// Smallest eigenvalue of the discrete Dirichlet Laplacian `K x = λ M x` by
/// inverse iteration with CG inner solves.
pub fn discrete_lambda1(mesh: &Mesh) -> Result<f64> {
    let problem = ProblemSpec::new(Diffusion::identity(), 0.0, Arc::new(|_| 0.0), mesh.domain())?;
    let stiffness = assemble(&Arc::new(mesh.clone()), &problem)?.matrix;
    let mass = assemble_mass(mesh);
    let n = stiffness.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("mesh has no interior nodes".into()));
    }
    let inner = CgOptions { rel_tol: 1e-12, ..Default::default() };
    let rayleigh = |x: &[f64]| dot(x, &stiffness.apply(x)) / dot(x, &mass.apply(x));
    let mut x = vec![1.0; n];
    let mut lambda = rayleigh(&x);
    for _ in 0..500 {
        let rhs = mass.apply(&x);
        let mut y = conjugate_gradient(&stiffness, &rhs, inner)?.x;
        let scale = dot(&y, &mass.apply(&y)).sqrt();
        y.iter_mut().for_each(|v| *v /= scale);
        let next = rayleigh(&y);
        x = y;
        if (next - lambda).abs() <= LAMBDA1_TOL * next {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::SolverFailure { iterations: 500, residual: f64::NAN })
}

/// Solver settings for one manufactured run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub assembly_quad_order: usize,
    pub rel_tol: f64,
    pub jacobi: bool,
    pub recovery: RecoveryConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            assembly_quad_order: ASSEMBLY_QUAD_ORDER,
            rel_tol: 1e-10,
            jacobi: false,
            recovery: RecoveryConfig::default(),
        }
    }
}

/// Mesh, Galerkin solution, recovered flux and true error of one run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: Arc<Mesh>,
    pub u_fem: FeScalarField,
    pub flux: FeVectorField,
    pub error: TrueError,
}

pub fn solve_case(case: &ManufacturedCase, n: usize, opts: SolveOptions) -> Result<Solution> {
    let mesh = Arc::new(build_uniform_mesh(n, case.problem.domain)?);
    let system = assemble_with_order(&mesh, &case.problem, opts.assembly_quad_order)?;
    let (u_fem, _) = solve_with(&system, CgOptions { rel_tol: opts.rel_tol, max_iter: None, jacobi: opts.jacobi })?;
    let flux = recover_flux(&u_fem, &case.problem, opts.recovery);
    let error = true_error(case, &u_fem)?;
    Ok(Solution { mesh, u_fem, flux, error })
}

/// One row group of a sweep: a solved `(case, n, σ)` point and its reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub case: String,
    pub n: usize,
    pub h: f64,
    pub sigma: f64,
    pub sigma_star_policy: String,
    pub energy_error: f64,
    pub l2_error: f64,
    pub reports: Vec<MajorantReport>,
}

impl RunRecord {
    pub fn effectivity(&self, i: usize) -> Option<f64> {
        crate::majorants::effectivity(self.reports[i].total, self.energy_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_values_at_centre() {
        let c = manufactured("sinsin", 0.0).unwrap();
        assert!((c.problem.f([0.5, 0.5]) - 2.0 * PI * PI).abs() < 1e-12);
        let c = manufactured("bubble", 0.0).unwrap();
        assert!((c.problem.f([0.5, 0.5]) - 1.0).abs() < 1e-15);
        let c = manufactured("sinsin", 3.0).unwrap();
        assert!((c.problem.f([0.5, 0.5]) - (2.0 * PI * PI + 3.0)).abs() < 1e-12);
        assert_eq!(manufactured("nope", 0.0).unwrap_err(), Error::UnknownCase("nope".into()));
    }

    #[test]
    fn exact_solutions_vanish_on_boundary() {
        for name in CASE_NAMES {
            let c = manufactured(name, 1.0).unwrap();
            for k in 0..25 {
                let s = k as f64 / 24.0;
                for p in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
                    assert!((c.u)(p).abs() <= 1e-12, "{name} at {p:?}");
                }
            }
        }
    }

    #[test]
    fn rate_examples() {
        assert!((convergence_rate(&[(1.0, 1.0), (0.5, 0.5), (0.25, 0.25)]).unwrap() - 1.0).abs() < 1e-14);
        assert!((convergence_rate(&[(1.0, 1.0), (0.5, 0.25), (0.25, 0.0625)]).unwrap() - 2.0).abs() < 1e-14);
        assert!(convergence_rate(&[(1.0, 1.0), (0.5, 0.0), (0.25, 0.1)]).is_err());
        assert!(convergence_rate(&[(1.0, 1.0), (0.5, 0.5)]).is_err());
    }

    #[test]
    fn zero_approximation_error_equals_solution_norm() {
        let c = manufactured("sinsin", 0.0).unwrap();
        let mesh = Arc::new(build_uniform_mesh(32, Rectangle::unit_square()).unwrap());
        let e = true_error(&c, &FeScalarField::zero(mesh)).unwrap();
        assert!((e.energy - PI / 2f64.sqrt()).abs() < 1e-6);
        assert!((e.l2 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn oracle_identity() {
        let c = manufactured("bubble", 5.0).unwrap();
        let s = solve_case(&c, 8, SolveOptions::default()).unwrap();
        let e = s.error;
        let a_sq = e.energy.powi(2) - 5.0 * e.l2.powi(2);
        assert!((a_sq - e.pair.a_norm_sq).abs() <= 1e-12 * e.energy.powi(2));
    }
}
