use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CDagSource, ExperimentConfig, PolicyConfig};
use crate::error::{Error, Result};
use crate::majorants::{
    aubin_from_terms, calibrate_c_dag, churilova_from_terms, effectivity, majorant_line_integral,
    repin_frolov_from_terms, robust_from_terms, sigma_star, CalibrationRun, Estimator, MajorantInput, MajorantReport,
    SigmaStarPolicy,
};
use crate::verification::{convergence_rate, manufactured, solve_case, RunRecord, SolveOptions};

pub const CSV_HEADER: &str = "case,n,h,sigma,estimator,sigma_star_policy,sigma_star,flux_term,residual_term,theta_big,theta_small,eps,total,energy_error,l2_error,effectivity,status";

/// Relative slack allowed on `sqrt(total) ≥ energy_error` for guaranteed rows.
pub const GUARANTEE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// A guaranteed estimator fell below the true error.
    Violation,
    Error(String),
}

impl RowStatus {
    fn cell(&self) -> String {
        match self {
            RowStatus::Ok => "ok".into(),
            RowStatus::Violation => "violation".into(),
            RowStatus::Error(msg) => format!("error: {}", msg.replace([',', '"', '\n'], ";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub case: String,
    pub n: usize,
    pub h: f64,
    pub sigma: f64,
    pub estimator: Estimator,
    pub sigma_star_policy: String,
    pub sigma_star: Option<f64>,
    pub report: Option<MajorantReport>,
    pub energy_error: f64,
    pub l2_error: f64,
    pub status: RowStatus,
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl CsvRow {
    pub fn effectivity(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| effectivity(r.total, self.energy_error))
    }

    pub fn to_csv_line(&self) -> String {
        let r = self.report.as_ref();
        [
            self.case.clone(),
            self.n.to_string(),
            num(self.h),
            num(self.sigma),
            self.estimator.name().to_string(),
            self.sigma_star_policy.clone(),
            opt(self.sigma_star),
            opt(r.map(|r| r.flux_term)),
            opt(r.map(|r| r.residual_term)),
            opt(r.and_then(|r| r.theta_big)),
            opt(r.and_then(|r| r.theta_small)),
            opt(r.and_then(|r| r.eps)),
            opt(r.map(|r| r.total)),
            num(self.energy_error),
            num(self.l2_error),
            opt(self.effectivity()),
            self.status.cell(),
        ]
        .join(",")
    }
}

/// Slopes of `log(total)` against `log(h)` for one `(case, estimator)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub case: String,
    pub estimator: Estimator,
    /// `(σ, slope)` for every `σ` with at least three valid levels.
    pub slopes: Vec<(f64, f64)>,
    pub min_slope: Option<f64>,
    pub min_effectivity: Option<f64>,
    pub max_effectivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rate_fits: Vec<RateFit>,
    /// `(case, σ, energy slope, L2 slope)`
    pub error_rates: Vec<(String, f64, f64, f64)>,
    pub c_dag: BTreeMap<String, f64>,
    pub rows: usize,
    pub error_rows: usize,
    pub violations: usize,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rows: {}  error rows: {}  violations: {}", self.rows, self.error_rows, self.violations);
        for (case, c) in &self.c_dag {
            let _ = writeln!(s, "c_dag[{case}] = {c:?}");
        }
        for (case, sigma, e, l2) in &self.error_rates {
            let _ = writeln!(s, "{case} sigma={sigma:?}: energy-error slope {e:.3}, L2-error slope {l2:.3}");
        }
        for f in &self.rate_fits {
            let slopes: Vec<String> = f.slopes.iter().map(|(sg, sl)| format!("sigma={sg:?}:{sl:.3}")).collect();
            let _ = writeln!(
                s,
                "{} {}: total slopes [{}] min {} effectivity [{}, {}]",
                f.case,
                f.estimator,
                slopes.join(" "),
                f.min_slope.map_or("-".into(), |v| format!("{v:.3}")),
                f.min_effectivity.map_or("-".into(), |v| format!("{v:.4}")),
                f.max_effectivity.map_or("-".into(), |v| format!("{v:.4}")),
            );
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<CsvRow>,
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

impl SweepOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::with_capacity(200 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv_line());
            out.push('\n');
        }
        out
    }

    pub fn all_guarantees_held(&self) -> bool {
        self.summary.violations == 0
    }
}

fn solve_options(cfg: &ExperimentConfig) -> SolveOptions {
    SolveOptions {
        assembly_quad_order: cfg.assembly_quad_order,
        rel_tol: cfg.solver_tol,
        jacobi: cfg.jacobi,
        recovery: cfg.recovery,
    }
}

/// `c_dag` from `σ = 0` solves of `case` at the given levels.
pub fn calibrate_case(case: &str, levels: &[usize], opts: SolveOptions) -> Result<f64> {
    let mc = manufactured(case, 0.0)?;
    let runs = levels
        .iter()
        .map(|&n| {
            let s = solve_case(&mc, n, opts)?;
            Ok(CalibrationRun { h: s.mesh.h(), energy_error: s.error.energy, l2_error: s.error.l2 })
        })
        .collect::<Result<Vec<_>>>()?;
    calibrate_c_dag(&runs)
}

/// Whether the estimator is a guaranteed upper bound under this policy.
fn guaranteed(est: Estimator, policy: &PolicyConfig) -> bool {
    match est {
        Estimator::Robust => !matches!(policy, PolicyConfig::FemScale { .. }),
        _ => true,
    }
}

fn run_point(
    cfg: &ExperimentConfig,
    case: &str,
    n: usize,
    sigma: f64,
    c_dag: Option<f64>,
) -> Result<(Vec<CsvRow>, RunRecord)> {
    let mc = manufactured(case, sigma)?;
    let sol = solve_case(&mc, n, solve_options(cfg))?;
    let problem = &mc.problem;
    let h = sol.mesh.h();
    let policy = match cfg.policy {
        PolicyConfig::GlobalFriedrichs { lambda1_lower } => SigmaStarPolicy::GlobalFriedrichs {
            lambda1_lower: lambda1_lower.unwrap_or_else(|| problem.domain.dirichlet_lambda1()),
        },
        PolicyConfig::FemScale { .. } => {
            SigmaStarPolicy::FemScale { c_dag: c_dag.expect("c_dag resolved before the sweep") }
        }
        PolicyConfig::Oracle => SigmaStarPolicy::Oracle,
    };
    let star = sigma_star(&policy, Some(h), problem, Some(sol.error.pair));
    let mut input = MajorantInput::new(&sol.mesh, &sol.u_fem, &sol.flux, problem);
    input.quad_order = cfg.error_quad_order;
    let terms = input.terms()?;
    let (mu1, _) = problem.diffusion.eigenvalues();
    let c_omega = cfg.c_omega.unwrap_or_else(|| 1.0 / (mu1 * problem.domain.dirichlet_lambda1()));

    let mut rows = Vec::with_capacity(cfg.estimators.len());
    let mut reports = Vec::new();
    for &est in &cfg.estimators {
        let report = match est {
            Estimator::Robust => star.clone().and_then(|s| robust_from_terms(terms, sigma, s)),
            Estimator::Aubin => aubin_from_terms(terms, sigma),
            Estimator::RepinFrolov => {
                if sigma != 0.0 || !problem.diffusion.is_identity() {
                    Err(Error::Scope("repin_frolov requires A = I and sigma = 0".into()))
                } else {
                    repin_frolov_from_terms(terms, cfg.eps, c_omega)
                }
            }
            Estimator::Churilova => churilova_from_terms(terms, sigma, cfg.eps, c_omega),
            Estimator::LineIntegral => {
                let beta1 = cfg.beta1;
                majorant_line_integral(&input, move |_| beta1)
            }
        };
        let (report, status) = match report {
            Ok(r) => {
                let r = r.with_effectivity(sol.error.energy);
                let held = r.effectivity.map_or(true, |e| e >= 1.0 - GUARANTEE_SLACK);
                let status = if guaranteed(est, &cfg.policy) && !held { RowStatus::Violation } else { RowStatus::Ok };
                reports.push(r.clone());
                (Some(r), status)
            }
            Err(e) => (None, RowStatus::Error(e.to_string())),
        };
        rows.push(CsvRow {
            case: case.to_string(),
            n,
            h,
            sigma,
            estimator: est,
            sigma_star_policy: policy.name().to_string(),
            sigma_star: star.as_ref().ok().copied(),
            report,
            energy_error: sol.error.energy,
            l2_error: sol.error.l2,
            status,
        });
    }
    let record = RunRecord {
        case: case.to_string(),
        n,
        h,
        sigma,
        sigma_star_policy: policy.name().to_string(),
        energy_error: sol.error.energy,
        l2_error: sol.error.l2,
        reports,
    };
    Ok((rows, record))
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let threads = cfg.threads.unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| sweep_in_pool(cfg))
}

fn sweep_in_pool(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let mut c_dag = BTreeMap::new();
    if let PolicyConfig::FemScale { c_dag: source } = cfg.policy {
        let values: Vec<(String, f64)> = cfg
            .cases
            .par_iter()
            .map(|case| {
                let c = match source {
                    CDagSource::Fixed(c) => c,
                    CDagSource::Calibrate => calibrate_case(case, &cfg.calibration_levels, solve_options(cfg))?,
                };
                Ok((case.clone(), c))
            })
            .collect::<Result<_>>()?;
        c_dag.extend(values);
    }

    let points: Vec<(&String, usize, f64)> = cfg
        .cases
        .iter()
        .flat_map(|c| cfg.n.iter().flat_map(move |&n| cfg.sigma.iter().map(move |&s| (c, n, s))))
        .collect();
    // collect preserves input order regardless of scheduling
    let results: Vec<(Vec<CsvRow>, RunRecord)> = points
        .par_iter()
        .map(|&(case, n, sigma)| run_point(cfg, case, n, sigma, c_dag.get(case).copied()))
        .collect::<Result<_>>()?;

    let (rows, records): (Vec<Vec<CsvRow>>, Vec<RunRecord>) = results.into_iter().unzip();
    let rows: Vec<CsvRow> = rows.into_iter().flatten().collect();
    let summary = summarize(cfg, &rows, &records, c_dag);
    Ok(SweepOutcome { rows, records, summary })
}

fn summarize(cfg: &ExperimentConfig, rows: &[CsvRow], records: &[RunRecord], c_dag: BTreeMap<String, f64>) -> Summary {
    let mut rate_fits = Vec::new();
    for case in &cfg.cases {
        for &est in &cfg.estimators {
            let selected: Vec<&CsvRow> =
                rows.iter().filter(|r| &r.case == case && r.estimator == est && r.report.is_some()).collect();
            let mut slopes = Vec::new();
            for &sigma in &cfg.sigma {
                let pairs: Vec<(f64, f64)> = selected
                    .iter()
                    .filter(|r| r.sigma == sigma)
                    .filter_map(|r| r.report.as_ref().map(|rep| (r.h, rep.total)))
                    .collect();
                if let Ok(s) = convergence_rate(&pairs) {
                    slopes.push((sigma, s));
                }
            }
            let effs: Vec<f64> = selected.iter().filter_map(|r| r.effectivity()).collect();
            rate_fits.push(RateFit {
                case: case.clone(),
                estimator: est,
                min_slope: slopes.iter().map(|s| s.1).reduce(f64::min),
                slopes,
                min_effectivity: effs.iter().copied().reduce(f64::min),
                max_effectivity: effs.iter().copied().reduce(f64::max),
            });
        }
    }

    let mut error_rates = Vec::new();
    for case in &cfg.cases {
        for &sigma in &cfg.sigma {
            let sel: Vec<&RunRecord> = records.iter().filter(|r| &r.case == case && r.sigma == sigma).collect();
            let energy = convergence_rate(&sel.iter().map(|r| (r.h, r.energy_error)).collect::<Vec<_>>());
            let l2 = convergence_rate(&sel.iter().map(|r| (r.h, r.l2_error)).collect::<Vec<_>>());
            if let (Ok(e), Ok(l)) = (energy, l2) {
                error_rates.push((case.clone(), sigma, e, l));
            }
        }
    }

    Summary {
        rate_fits,
        error_rates,
        c_dag,
        rows: rows.len(),
        error_rows: rows.iter().filter(|r| matches!(r.status, RowStatus::Error(_))).count(),
        violations: rows.iter().filter(|r| r.status == RowStatus::Violation).count(),
        warnings: cfg.warnings.clone(),
    }
}
