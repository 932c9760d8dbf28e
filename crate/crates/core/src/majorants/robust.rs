use super::sigma::theta_pair;
use super::{Estimator, MajorantInput, MajorantReport, Terms};
use crate::error::{Error, Result};

/// `Θ · (flux + θ · residual)`, defined for every `σ ≥ 0`.
pub fn robust_from_terms(terms: Terms, sigma: f64, sigma_star: f64) -> Result<MajorantReport> {
    let (theta_big, theta_small) = theta_pair(sigma, sigma_star)?;
    let total = theta_big * (terms.flux + theta_small * terms.residual);
    let mut report = MajorantReport::new(Estimator::Robust, terms, total);
    report.theta_big = Some(theta_big);
    report.theta_small = Some(theta_small);
    report.sigma_star = Some(sigma_star);
    if sigma > sigma_star {
        report.notes.push("sigma > sigma*: Aubin branch".into());
    }
    Ok(report)
}

pub fn majorant_robust(input: &MajorantInput<'_>, sigma_star: f64) -> Result<MajorantReport> {
    // validate before spending the quadrature
    theta_pair(input.problem.sigma, sigma_star)?;
    robust_from_terms(input.terms()?, input.problem.sigma, sigma_star)
}

/// `flux + residual / σ`; undefined at `σ = 0`.
pub fn aubin_from_terms(terms: Terms, sigma: f64) -> Result<MajorantReport> {
    if sigma == 0.0 {
        return Err(Error::AubinAtZeroSigma);
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    // same operation sequence as the robust branch above σ*, so the two agree bitwise
    let theta_big = 1.0;
    let theta_small = 1.0 / sigma;
    let total = theta_big * (terms.flux + theta_small * terms.residual);
    let mut report = MajorantReport::new(Estimator::Aubin, terms, total);
    report.theta_big = Some(theta_big);
    report.theta_small = Some(theta_small);
    Ok(report)
}

pub fn majorant_aubin(input: &MajorantInput<'_>) -> Result<MajorantReport> {
    if input.problem.sigma == 0.0 {
        return Err(Error::AubinAtZeroSigma);
    }
    aubin_from_terms(input.terms()?, input.problem.sigma)
}
