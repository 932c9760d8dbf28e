//! TOML experiment configuration.
//!
//! The document is a flat table of keys; see [`KNOWN_KEYS`]. Only `cases` and
//! `n` are required.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::fem::{ASSEMBLY_QUAD_ORDER, ERROR_QUAD_ORDER};
use crate::majorants::{Eps, Estimator};
use crate::quadrature::MAX_ORDER;
use crate::recovery::{RecoveryConfig, Weighting};
use crate::verification::CASE_NAMES;

pub const KNOWN_KEYS: [&str; 18] = [
    "cases",
    "n",
    "sigma",
    "estimators",
    "sigma_star_policy",
    "c_dag",
    "lambda1_lower",
    "calibration_levels",
    "recovery",
    "output",
    "assembly_quad_order",
    "error_quad_order",
    "solver_tol",
    "jacobi",
    "eps",
    "c_omega",
    "beta1",
    "threads",
];

pub const DEFAULT_CALIBRATION_LEVELS: [usize; 3] = [8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CDagSource {
    Fixed(f64),
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyConfig {
    /// `lambda1_lower` defaults to the exact eigenvalue of the rectangle.
    GlobalFriedrichs {
        lambda1_lower: Option<f64>,
    },
    FemScale {
        c_dag: CDagSource,
    },
    Oracle,
}

impl PolicyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::GlobalFriedrichs { .. } => "global_friedrichs",
            PolicyConfig::FemScale { .. } => "fem_scale",
            PolicyConfig::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cases: Vec<String>,
    pub n: Vec<usize>,
    pub sigma: Vec<f64>,
    pub estimators: Vec<Estimator>,
    pub policy: PolicyConfig,
    pub calibration_levels: Vec<usize>,
    pub recovery: RecoveryConfig,
    pub output: Option<PathBuf>,
    pub assembly_quad_order: usize,
    pub error_quad_order: usize,
    pub solver_tol: f64,
    pub jacobi: bool,
    pub eps: Eps,
    /// Friedrichs constant override; defaults to `1/(μ1 λ1)` of the rectangle.
    pub c_omega: Option<f64>,
    pub beta1: f64,
    pub threads: Option<usize>,
    /// Non-fatal findings from validation.
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// Config with defaults for everything except the case list and levels.
    pub fn new(cases: Vec<String>, n: Vec<usize>) -> Self {
        ExperimentConfig {
            cases,
            n,
            sigma: vec![0.0],
            estimators: vec![Estimator::Robust],
            policy: PolicyConfig::GlobalFriedrichs { lambda1_lower: None },
            calibration_levels: DEFAULT_CALIBRATION_LEVELS.to_vec(),
            recovery: RecoveryConfig { weighting: Weighting::AreaWeighted },
            output: None,
            assembly_quad_order: ASSEMBLY_QUAD_ORDER,
            error_quad_order: ERROR_QUAD_ORDER,
            solver_tol: 1e-10,
            jacobi: false,
            eps: Eps::Auto,
            c_omega: None,
            beta1: 0.5,
            threads: None,
            warnings: Vec::new(),
        }
    }

    pub fn validate(mut self) -> Result<Self> {
        let bad = |field: &str, reason: String| Error::InvalidField { field: field.into(), reason };
        if self.cases.is_empty() {
            return Err(bad("cases", "must not be empty".into()));
        }
        if let Some(c) = self.cases.iter().find(|c| !CASE_NAMES.contains(&c.as_str())) {
            return Err(bad("cases", format!("unknown case `{c}` (known: {})", CASE_NAMES.join(", "))));
        }
        if self.n.is_empty() {
            return Err(bad("n", "must not be empty".into()));
        }
        if let Some(n) = self.n.iter().find(|&&n| n < 2) {
            return Err(bad("n", format!("subdivision counts must be >= 2, got {n}")));
        }
        if self.sigma.is_empty() {
            return Err(bad("sigma", "must not be empty".into()));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(bad("sigma", format!("values must be finite and >= 0, got {s}")));
        }
        if self.estimators.is_empty() {
            return Err(bad("estimators", "must not be empty".into()));
        }
        for (field, q) in
            [("assembly_quad_order", self.assembly_quad_order), ("error_quad_order", self.error_quad_order)]
        {
            if !(1..=MAX_ORDER).contains(&q) {
                return Err(bad(field, format!("must be in 1..={MAX_ORDER}, got {q}")));
            }
        }
        if !(self.solver_tol > 0.0) {
            return Err(bad("solver_tol", format!("must be positive, got {}", self.solver_tol)));
        }
        match self.policy {
            PolicyConfig::GlobalFriedrichs { lambda1_lower: Some(l) } if !(l > 0.0) => {
                return Err(bad("lambda1_lower", format!("must be positive, got {l}")));
            }
            PolicyConfig::FemScale { c_dag: CDagSource::Fixed(c) } if !(c > 0.0) => {
                return Err(bad("c_dag", format!("must be positive, got {c}")));
            }
            _ => {}
        }
        if self.calibration_levels.len() < 3 || self.calibration_levels.iter().any(|&n| n < 2) {
            return Err(bad("calibration_levels", "needs at least 3 levels, each >= 2".into()));
        }
        if let Eps::Fixed(e) = self.eps {
            if !(e > 0.0) {
                return Err(bad("eps", format!("must be positive or \"auto\", got {e}")));
            }
        }
        if let Some(c) = self.c_omega {
            if !(c > 0.0) {
                return Err(bad("c_omega", format!("must be positive, got {c}")));
            }
        }
        if !self.beta1.is_finite() {
            return Err(bad("beta1", "must be finite".into()));
        }
        if self.threads == Some(0) {
            return Err(bad("threads", "must be >= 1".into()));
        }
        if self.estimators.contains(&Estimator::Aubin) && self.sigma.contains(&0.0) {
            self.warnings.push("estimator `aubin` with sigma=0: those rows will be error rows".into());
        }
        Ok(self)
    }
}

fn number(field: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::InvalidField { field: field.into(), reason: format!("expected a number, got {other}") }),
    }
}

fn count(field: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(Error::InvalidField {
            field: field.into(),
            reason: format!("expected a nonnegative integer, got {other}"),
        }),
    }
}

fn string<'a>(field: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::InvalidField { field: field.into(), reason: format!("expected a string, got {v}") })
}

fn list<'a>(field: &str, v: &'a Value) -> Result<&'a [Value]> {
    v.as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| Error::InvalidField { field: field.into(), reason: format!("expected an array, got {v}") })
}

/// Parse and validate a TOML document, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
    let unknown: Vec<String> = table.keys().filter(|k| !KNOWN_KEYS.contains(&k.as_str())).cloned().collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    let required = |k: &str| {
        table.get(k).ok_or_else(|| Error::InvalidField { field: k.into(), reason: "missing required key".into() })
    };

    let cases = list("cases", required("cases")?)?
        .iter()
        .map(|v| string("cases", v).map(str::to_string))
        .collect::<Result<Vec<_>>>()?;
    let n = list("n", required("n")?)?.iter().map(|v| count("n", v)).collect::<Result<Vec<_>>>()?;
    let mut cfg = ExperimentConfig::new(cases, n);

    if let Some(v) = table.get("sigma") {
        cfg.sigma = list("sigma", v)?.iter().map(|v| number("sigma", v)).collect::<Result<_>>()?;
    }
    if let Some(v) = table.get("estimators") {
        cfg.estimators = list("estimators", v)?
            .iter()
            .map(|v| {
                let s = string("estimators", v)?;
                Estimator::from_name(s).ok_or_else(|| Error::InvalidField {
                    field: "estimators".into(),
                    reason: format!("unknown estimator `{s}`"),
                })
            })
            .collect::<Result<_>>()?;
    }

    let lambda1_lower = table.get("lambda1_lower").map(|v| number("lambda1_lower", v)).transpose()?;
    let c_dag = match table.get("c_dag") {
        None => None,
        Some(Value::String(s)) if s == "calibrate" => Some(CDagSource::Calibrate),
        Some(v) => Some(CDagSource::Fixed(number("c_dag", v)?)),
    };
    let policy_name = table.get("sigma_star_policy").map(|v| string("sigma_star_policy", v)).transpose()?;
    cfg.policy = match policy_name.unwrap_or("global_friedrichs") {
        "global_friedrichs" => PolicyConfig::GlobalFriedrichs { lambda1_lower },
        "fem_scale" => PolicyConfig::FemScale { c_dag: c_dag.unwrap_or(CDagSource::Calibrate) },
        "oracle" => PolicyConfig::Oracle,
        other => {
            return Err(Error::InvalidField {
                field: "sigma_star_policy".into(),
                reason: format!("unknown policy `{other}` (global_friedrichs, fem_scale, oracle)"),
            })
        }
    };
    if let Some(v) = table.get("calibration_levels") {
        cfg.calibration_levels =
            list("calibration_levels", v)?.iter().map(|v| count("calibration_levels", v)).collect::<Result<_>>()?;
    }
    if let Some(v) = table.get("recovery") {
        cfg.recovery.weighting = match string("recovery", v)? {
            "area_weighted" | "area" => Weighting::AreaWeighted,
            "uniform" => Weighting::Uniform,
            other => {
                return Err(Error::InvalidField {
                    field: "recovery".into(),
                    reason: format!("unknown weighting `{other}` (area_weighted, uniform)"),
                })
            }
        };
    }
    if let Some(v) = table.get("output") {
        cfg.output = Some(PathBuf::from(string("output", v)?));
    }
    if let Some(v) = table.get("assembly_quad_order") {
        cfg.assembly_quad_order = count("assembly_quad_order", v)?;
    }
    if let Some(v) = table.get("error_quad_order") {
        cfg.error_quad_order = count("error_quad_order", v)?;
    }
    if let Some(v) = table.get("solver_tol") {
        cfg.solver_tol = number("solver_tol", v)?;
    }
    if let Some(v) = table.get("jacobi") {
        cfg.jacobi = v.as_bool().ok_or_else(|| Error::InvalidField {
            field: "jacobi".into(),
            reason: format!("expected a boolean, got {v}"),
        })?;
    }
    if let Some(v) = table.get("eps") {
        cfg.eps = match v {
            Value::String(s) if s == "auto" => Eps::Auto,
            other => Eps::Fixed(number("eps", other)?),
        };
    }
    if let Some(v) = table.get("c_omega") {
        cfg.c_omega = Some(number("c_omega", v)?);
    }
    if let Some(v) = table.get("beta1") {
        cfg.beta1 = number("beta1", v)?;
    }
    if let Some(v) = table.get("threads") {
        cfg.threads = Some(count("threads", v)?);
    }
    cfg.validate()
}
