//! Guaranteed a posteriori error majorants.
//!
//! Every estimator is built from the same two squared quantities of a pair
//! `(v, z)`:
//!
//! * the flux term `∫ A⁻¹(A∇v + z)·(A∇v + z)`,
//! * the residual term `∫ (f − σv − div z)²`,
//!
//! evaluated with the analytic source `f` and the exact divergence of `z`.
//! [`MajorantInput::terms`] computes both once; the individual estimators
//! combine them with their own weights.

mod classical;
mod line_integral;
mod robust;
mod sigma;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use classical::{churilova_from_terms, majorant_churilova, majorant_repin_frolov, repin_frolov_from_terms, Eps};
pub use line_integral::{line_integral_terms, majorant_line_integral};
pub use robust::{aubin_from_terms, majorant_aubin, majorant_robust, robust_from_terms};
pub use sigma::{calibrate_c_dag, sigma_star, theta_pair, CalibrationRun, ErrorPair, SigmaStarPolicy, C_DAG_SAFETY};

use crate::error::Result;
use crate::fem::{
    integrate_elementwise, FeScalarField, FeVectorField, ProblemSpec, ScalarFn, VectorFn, ERROR_QUAD_ORDER,
};
use crate::mesh::{Mesh, Point};
use crate::recovery::divergence_on;

/// Approximate solution `v`, evaluated inside triangle `t` at barycentric
/// coordinates `bary` (physical point `x`).
pub trait TrialFunction: Sync {
    fn value(&self, t: usize, bary: &[f64; 3], x: Point) -> f64;
    fn gradient(&self, t: usize, bary: &[f64; 3], x: Point) -> [f64; 2];
}

/// Test flux `z ∈ H(div)`.
pub trait TestFlux: Sync {
    fn value(&self, t: usize, bary: &[f64; 3], x: Point) -> [f64; 2];
    fn divergence(&self, t: usize, bary: &[f64; 3], x: Point) -> f64;
}

impl TrialFunction for FeScalarField {
    fn value(&self, t: usize, bary: &[f64; 3], _x: Point) -> f64 {
        FeScalarField::value(self, t, bary)
    }

    fn gradient(&self, t: usize, _bary: &[f64; 3], _x: Point) -> [f64; 2] {
        self.gradient_on(t)
    }
}

impl TestFlux for FeVectorField {
    fn value(&self, t: usize, bary: &[f64; 3], _x: Point) -> [f64; 2] {
        FeVectorField::value(self, t, bary)
    }

    fn divergence(&self, t: usize, _bary: &[f64; 3], _x: Point) -> f64 {
        divergence_on(self, t)
    }
}

/// Trial function given by closed-form value and gradient.
#[derive(Clone)]
pub struct AnalyticScalar {
    pub value: ScalarFn,
    pub gradient: VectorFn,
}

impl TrialFunction for AnalyticScalar {
    fn value(&self, _t: usize, _bary: &[f64; 3], x: Point) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, _t: usize, _bary: &[f64; 3], x: Point) -> [f64; 2] {
        (self.gradient)(x)
    }
}

/// Test flux given by closed-form value and divergence.
#[derive(Clone)]
pub struct AnalyticFlux {
    pub value: VectorFn,
    pub divergence: ScalarFn,
}

impl TestFlux for AnalyticFlux {
    fn value(&self, _t: usize, _bary: &[f64; 3], x: Point) -> [f64; 2] {
        (self.value)(x)
    }

    fn divergence(&self, _t: usize, _bary: &[f64; 3], x: Point) -> f64 {
        (self.divergence)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Robust,
    Aubin,
    RepinFrolov,
    Churilova,
    LineIntegral,
}

impl Estimator {
    pub const ALL: [Estimator; 5] =
        [Estimator::Robust, Estimator::Aubin, Estimator::RepinFrolov, Estimator::Churilova, Estimator::LineIntegral];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Robust => "robust",
            Estimator::Aubin => "aubin",
            Estimator::RepinFrolov => "repin_frolov",
            Estimator::Churilova => "churilova",
            Estimator::LineIntegral => "line_integral",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Estimator::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-estimator breakdown. Totals are in squared-norm units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantReport {
    pub estimator: Estimator,
    pub flux_term: f64,
    pub residual_term: f64,
    pub theta_big: Option<f64>,
    pub theta_small: Option<f64>,
    pub eps: Option<f64>,
    pub sigma_star: Option<f64>,
    pub total: f64,
    pub quad_order: usize,
    pub effectivity: Option<f64>,
    pub notes: Vec<String>,
}

impl MajorantReport {
    pub(crate) fn new(estimator: Estimator, terms: Terms, total: f64) -> Self {
        MajorantReport {
            estimator,
            flux_term: terms.flux,
            residual_term: terms.residual,
            theta_big: None,
            theta_small: None,
            eps: None,
            sigma_star: None,
            total,
            quad_order: terms.quad_order,
            effectivity: None,
            notes: Vec::new(),
        }
    }

    /// `sqrt(total) / energy_error`; left unset when the error vanishes.
    pub fn with_effectivity(mut self, energy_error: f64) -> Self {
        self.effectivity = effectivity(self.total, energy_error);
        self
    }
}

pub fn effectivity(total: f64, energy_error: f64) -> Option<f64> {
    (energy_error > 0.0).then(|| total.sqrt() / energy_error)
}

/// Squared flux and residual terms of a `(v, z)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terms {
    pub flux: f64,
    pub residual: f64,
    pub quad_order: usize,
}

impl Terms {
    pub fn new(flux: f64, residual: f64) -> Self {
        Terms { flux, residual, quad_order: ERROR_QUAD_ORDER }
    }
}

/// Everything an estimator evaluates: mesh for quadrature, `v`, `z`, problem data.
#[derive(Clone, Copy)]
pub struct MajorantInput<'a> {
    pub mesh: &'a Mesh,
    pub v: &'a dyn TrialFunction,
    pub z: &'a dyn TestFlux,
    pub problem: &'a ProblemSpec,
    pub quad_order: usize,
}

impl<'a> MajorantInput<'a> {
    pub fn new(mesh: &'a Mesh, v: &'a dyn TrialFunction, z: &'a dyn TestFlux, problem: &'a ProblemSpec) -> Self {
        MajorantInput { mesh, v, z, problem, quad_order: ERROR_QUAD_ORDER }
    }

    /// `f − σv − div z` at a point.
    pub fn residual_at(&self, t: usize, bary: &[f64; 3], x: Point) -> f64 {
        self.problem.f(x) - self.problem.sigma * self.v.value(t, bary, x) - self.z.divergence(t, bary, x)
    }

    pub fn terms(&self) -> Result<Terms> {
        let a = &self.problem.diffusion;
        let flux = integrate_elementwise(self.mesh, self.quad_order, |t, b, x| {
            let agv = a.apply(self.v.gradient(t, b, x));
            let z = self.z.value(t, b, x);
            a.inverse_energy([agv[0] + z[0], agv[1] + z[1]])
        })?;
        let residual = integrate_elementwise(self.mesh, self.quad_order, |t, b, x| self.residual_at(t, b, x).powi(2))?;
        Ok(Terms { flux, residual, quad_order: self.quad_order })
    }
}

/// `∫ A∇e·∇e + σ ∫ e²` with order-6 quadrature.
pub fn energy_norm_sq(
    e_grad: impl Fn(Point) -> [f64; 2],
    e_val: impl Fn(Point) -> f64,
    problem: &ProblemSpec,
    mesh: &Mesh,
) -> Result<f64> {
    let a = &problem.diffusion;
    integrate_elementwise(mesh, ERROR_QUAD_ORDER, |_, _, x| a.energy(e_grad(x)) + problem.sigma * e_val(x).powi(2))
}

/// `∫ A⁻¹w·w` with order-6 quadrature.
pub fn flux_norm_sq(w: impl Fn(Point) -> [f64; 2], problem: &ProblemSpec, mesh: &Mesh) -> Result<f64> {
    integrate_elementwise(mesh, ERROR_QUAD_ORDER, |_, _, x| problem.diffusion.inverse_energy(w(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Diffusion;
    use crate::mesh::{build_uniform_mesh, Rectangle};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn problem(a: [[f64; 2]; 2], sigma: f64) -> ProblemSpec {
        ProblemSpec::new(Diffusion::new(a).unwrap(), sigma, Arc::new(|_| 0.0), Rectangle::unit_square()).unwrap()
    }

    const I: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn energy_norm_examples() {
        let mesh = build_uniform_mesh(32, Rectangle::unit_square()).unwrap();
        let e = |x: Point| (PI * x[0]).sin() * (PI * x[1]).sin();
        let ge = |x: Point| [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()];
        let v0 = energy_norm_sq(ge, e, &problem(I, 0.0), &mesh).unwrap();
        assert!((v0 - PI * PI / 2.0).abs() < 1e-6);
        let v2 = energy_norm_sq(ge, e, &problem(I, 2.0), &mesh).unwrap();
        assert!((v2 - (PI * PI / 2.0 + 0.5)).abs() < 1e-6);
        assert_eq!(energy_norm_sq(|_| [0.0, 0.0], |_| 0.0, &problem(I, 2.0), &mesh).unwrap(), 0.0);
    }

    #[test]
    fn flux_norm_examples() {
        let mesh = build_uniform_mesh(3, Rectangle::unit_square()).unwrap();
        let f = |a, w: [f64; 2]| flux_norm_sq(move |_| w, &problem(a, 0.0), &mesh).unwrap();
        assert!((f(I, [1.0, 0.0]) - 1.0).abs() < 1e-14);
        assert!((f([[2.0, 0.0], [0.0, 2.0]], [1.0, 0.0]) - 0.5).abs() < 1e-14);
        assert!((f([[1.0, 0.0], [0.0, 4.0]], [0.0, 1.0]) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(Estimator::from_name(e.name()), Some(e));
        }
        assert_eq!(Estimator::from_name("bogus"), None);
    }

    #[test]
    fn effectivity_rules() {
        assert_eq!(effectivity(4.0, 1.0), Some(2.0));
        assert_eq!(effectivity(4.0, 0.0), None);
    }
}
