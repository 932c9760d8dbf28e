//! `σ*` policies and the `(Θ, θ)` weights of the robust majorant.
//!
//! `σ*` is any constant with `‖e‖²₀ ≤ σ*⁻¹ ‖e‖²_A`, where `‖e‖²_A = ∫A∇e·∇e`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::ProblemSpec;

/// Multiplier applied to the worst observed ratio in [`calibrate_c_dag`].
pub const C_DAG_SAFETY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaStarPolicy {
    /// `σ* = μ1 · λ1_lower`, valid for every `v` by the Friedrichs inequality.
    GlobalFriedrichs { lambda1_lower: f64 },
    /// `σ* = 1 / (c_dag h²)`, valid for finite-element solutions.
    FemScale { c_dag: f64 },
    /// `σ* = ‖e‖²_A / ‖e‖²₀` from the exact error.
    Oracle,
}

impl SigmaStarPolicy {
    /// Friedrichs policy with the exact first eigenvalue of the problem's rectangle.
    pub fn friedrichs_for(problem: &ProblemSpec) -> Self {
        SigmaStarPolicy::GlobalFriedrichs { lambda1_lower: problem.domain.dirichlet_lambda1() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SigmaStarPolicy::GlobalFriedrichs { .. } => "global_friedrichs",
            SigmaStarPolicy::FemScale { .. } => "fem_scale",
            SigmaStarPolicy::Oracle => "oracle",
        }
    }

    /// Whether the robust majorant built on this policy is a guaranteed bound
    /// for arbitrary `v`.
    pub fn is_guaranteed(&self) -> bool {
        !matches!(self, SigmaStarPolicy::FemScale { .. })
    }
}

/// Squared error seminorm `‖e‖²_A` and squared `L2` norm `‖e‖²₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub a_norm_sq: f64,
    pub l2_sq: f64,
}

pub fn sigma_star(
    policy: &SigmaStarPolicy,
    h: Option<f64>,
    problem: &ProblemSpec,
    exact: Option<ErrorPair>,
) -> Result<f64> {
    let value = match *policy {
        SigmaStarPolicy::GlobalFriedrichs { lambda1_lower } => {
            if !(lambda1_lower > 0.0) {
                return Err(Error::InvalidArgument("lambda1_lower must be positive".into()));
            }
            problem.diffusion.eigenvalues().0 * lambda1_lower
        }
        SigmaStarPolicy::FemScale { c_dag } => {
            let h = h.ok_or_else(|| Error::InvalidArgument("FemScale sigma* requires the mesh parameter h".into()))?;
            if !(c_dag > 0.0) || !(h > 0.0) {
                return Err(Error::InvalidArgument("FemScale sigma* requires c_dag > 0 and h > 0".into()));
            }
            1.0 / (c_dag * h * h)
        }
        SigmaStarPolicy::Oracle => {
            let e = exact.ok_or(Error::OracleWithoutExactData)?;
            if e.l2_sq <= 0.0 {
                return Err(Error::ExactSolution);
            }
            e.a_norm_sq / e.l2_sq
        }
    };
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma* must be positive and finite, got {value}")));
    }
    Ok(value)
}

/// `(Θ, θ)` for `κ = σ/σ*`: `(2/(1+κ), 1/σ*)` on `[0, σ*]`, `(1, 1/σ)` above.
pub fn theta_pair(sigma: f64, sigma_star: f64) -> Result<(f64, f64)> {
    if !(sigma_star > 0.0) || !sigma_star.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma* must be positive, got {sigma_star}")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma <= sigma_star {
        let kappa = sigma / sigma_star;
        Ok((2.0 / (1.0 + kappa), 1.0 / sigma_star))
    } else {
        Ok((1.0, 1.0 / sigma))
    }
}

/// One `σ = 0` calibration solve: mesh parameter and error norms (not squared).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub h: f64,
    pub energy_error: f64,
    pub l2_error: f64,
}

/// `c_dag = 2 · max ‖e‖²₀ / (h² ‖e‖²_A)` over the runs.
pub fn calibrate_c_dag(runs: &[CalibrationRun]) -> Result<f64> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("calibration needs at least one run".into()));
    }
    let mut worst: f64 = 0.0;
    for r in runs {
        if !(r.energy_error > 0.0) || !(r.h > 0.0) {
            return Err(Error::InvalidArgument("calibration runs need h > 0 and a nonzero energy error".into()));
        }
        worst = worst.max(r.l2_error.powi(2) / (r.h.powi(2) * r.energy_error.powi(2)));
    }
    Ok(C_DAG_SAFETY * worst)
}
