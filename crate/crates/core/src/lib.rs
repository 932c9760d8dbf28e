//! Guaranteed a posteriori error majorants for P1 finite-element solutions of
//! `-div(A∇u) + σu = f` with homogeneous Dirichlet data on a rectangle.
//!
//! The crate is layered bottom-up:
//!
//! * [`mesh`] and [`quadrature`]: structured triangulations and Gauss rules,
//! * [`fem`]: assembly, conjugate-gradient solve, field evaluation,
//! * [`recovery`]: continuous test fluxes by nodal averaging,
//! * [`majorants`]: the estimators and the `σ*` machinery,
//! * [`verification`]: manufactured solutions, true errors, rates, `λ₁`,
//! * [`experiment`]: configuration-driven sweeps producing CSV rows.

pub mod error;
pub mod experiment;
pub mod fem;
pub mod majorants;
pub mod mesh;
pub mod quadrature;
pub mod recovery;
pub mod sparse;
pub mod verification;

pub use error::{Error, Result};
