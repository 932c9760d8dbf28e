//! Majorants with a free weight `ε`: the Poisson-only form with the
//! Friedrichs constant, and its extension to every `σ ≥ 0`.
//!
//! The Friedrichs constant uses the convention `‖v‖²₀ ≤ c_Ω ‖∇v‖²₀`, so that
//! `c_Ω = 1/λ₁`.

use serde::{Deserialize, Serialize};

use super::{Estimator, MajorantInput, MajorantReport, Terms};
use crate::error::{Error, Result};

pub const EPS_MIN: f64 = 1e-6;
pub const EPS_MAX: f64 = 1e6;
const LOG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eps {
    Auto,
    Fixed(f64),
}

impl Eps {
    fn validate(self) -> Result<Self> {
        match self {
            Eps::Fixed(e) if !(e > 0.0) || !e.is_finite() => {
                Err(Error::InvalidArgument(format!("eps must be positive and finite, got {e}")))
            }
            other => Ok(other),
        }
    }
}

fn check_c_omega(c_omega: f64) -> Result<()> {
    if c_omega > 0.0 && c_omega.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("c_omega must be positive, got {c_omega}")))
    }
}

/// `(1+ε)a² + c_Ω(1+1/ε)b²` with `a² = flux`, `b² = residual` (taken at `σ = 0`).
pub fn repin_frolov_from_terms(terms: Terms, eps: Eps, c_omega: f64) -> Result<MajorantReport> {
    check_c_omega(c_omega)?;
    let (a2, b2) = (terms.flux, terms.residual);
    let mut notes = vec![format!("c_omega={c_omega:?} (||v||^2 <= c_omega ||grad v||^2)")];
    let (eps_used, total) = match eps.validate()? {
        Eps::Fixed(e) => (Some(e), (1.0 + e) * a2 + c_omega * (1.0 + 1.0 / e) * b2),
        Eps::Auto => {
            let (a, b) = (a2.sqrt(), b2.sqrt());
            if a == 0.0 {
                notes.push("a=0: infimum as eps->inf, not attained".into());
                (None, c_omega * b2)
            } else if b == 0.0 {
                notes.push("b=0: infimum as eps->0, not attained".into());
                (None, a2)
            } else {
                let s = c_omega.sqrt() * b;
                (Some(s / a), (a + s) * (a + s))
            }
        }
    };
    let mut report = MajorantReport::new(Estimator::RepinFrolov, terms, total);
    report.eps = eps_used;
    report.notes = notes;
    Ok(report)
}

pub fn majorant_repin_frolov(input: &MajorantInput<'_>, eps: Eps, c_omega: f64) -> Result<MajorantReport> {
    let p = input.problem;
    if p.sigma != 0.0 || !p.diffusion.is_identity() {
        return Err(Error::Scope("repin_frolov requires A = I and sigma = 0".into()));
    }
    repin_frolov_from_terms(input.terms()?, eps, c_omega)
}

fn churilova_value(terms: Terms, sigma: f64, c_omega: f64, eps: f64) -> f64 {
    (1.0 + eps) * terms.flux + terms.residual / (sigma + eps / (c_omega * (1.0 + eps)))
}

/// Golden-section search for the minimizing `ε` on a log scale over `[1e-6, 1e6]`.
fn minimize_log_eps(g: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (EPS_MIN.ln(), EPS_MAX.ln());
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut gc, mut gd) = (g(c.exp()), g(d.exp()));
    while hi - lo > LOG_TOL {
        if gc <= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - inv_phi * (hi - lo);
            gc = g(c.exp());
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + inv_phi * (hi - lo);
            gd = g(d.exp());
        }
    }
    let mid = (0.5 * (lo + hi)).exp();
    // the objective can be monotone on the bracket; keep the best endpoint then
    [EPS_MIN, mid, EPS_MAX].into_iter().fold(mid, |best, e| if g(e) < g(best) { e } else { best })
}

/// `(1+ε)·flux + residual / (σ + ε/(c_Ω(1+ε)))`.
pub fn churilova_from_terms(terms: Terms, sigma: f64, eps: Eps, c_omega: f64) -> Result<MajorantReport> {
    check_c_omega(c_omega)?;
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut notes = vec![format!("c_omega={c_omega:?} (||v||^2 <= c_omega ||grad v||_A^2)")];
    let e = match eps.validate()? {
        Eps::Fixed(e) => e,
        Eps::Auto => {
            let e = minimize_log_eps(|e| churilova_value(terms, sigma, c_omega, e));
            if e == EPS_MIN || e == EPS_MAX {
                notes.push(format!("eps minimizer at bracket endpoint {e:e}"));
            }
            e
        }
    };
    let mut report = MajorantReport::new(Estimator::Churilova, terms, churilova_value(terms, sigma, c_omega, e));
    report.eps = Some(e);
    report.notes = notes;
    Ok(report)
}

pub fn majorant_churilova(input: &MajorantInput<'_>, eps: Eps, c_omega: f64) -> Result<MajorantReport> {
    eps.validate()?;
    churilova_from_terms(input.terms()?, input.problem.sigma, eps, c_omega)
}
