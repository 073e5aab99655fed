//! Run configuration: a TOML (or JSON) document naming the subcommand, the
//! problem and the numerical parameters.

use std::fmt;
use std::path::PathBuf;

use plap_core::homog::CellProblem;
use plap_core::{Coefficient, Exponent, Problem};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Pfunc,
    Solve,
    #[value(name = "lambda1-fem")]
    #[serde(rename = "lambda1-fem")]
    Lambda1Fem,
    #[value(name = "lambda2-eq")]
    #[serde(rename = "lambda2-eq")]
    Lambda2Eq,
    CheckBounds,
    Picone,
    Homogenize,
    Sweep,
}

impl Subcommand {
    fn needs_problem(self) -> bool {
        !matches!(self, Subcommand::Pfunc)
    }

    fn uses_cells(self) -> bool {
        matches!(self, Subcommand::Homogenize | Subcommand::Sweep)
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Subcommand::Pfunc => "pfunc",
            Subcommand::Solve => "solve",
            Subcommand::Lambda1Fem => "lambda1-fem",
            Subcommand::Lambda2Eq => "lambda2-eq",
            Subcommand::CheckBounds => "check-bounds",
            Subcommand::Picone => "picone",
            Subcommand::Homogenize => "homogenize",
            Subcommand::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Auto,
    Exact,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CoefficientKind {
    Constant,
    PiecewiseConstant,
    PiecewiseLinear,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientDoc {
    kind: CoefficientKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    breakpoints: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
    /// Shape of the unit cell of a periodic coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cell_kind: Option<CoefficientKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    length: f64,
    p: f64,
    a: CoefficientDoc,
    rho: CoefficientDoc,
}

/// Numerical parameters; absent entries take per-subcommand defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Mesh size for `lambda1-fem`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    /// Exponent for `pfunc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Externally computed eigenvalues for `check-bounds`, indexed from k = 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    /// Iteration cap for bisection and descent loops.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subcommand: Option<Subcommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    problem: Option<ProblemDoc>,
    #[serde(default)]
    params: Params,
    #[serde(default)]
    output: Output,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// Problem on `[0, ℓ]`.
    Interval(Problem),
    /// Periodic family described by unit cells on `[0, 1]`.
    Cells(CellProblem),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub problem: Option<ProblemSpec>,
    pub params: Params,
    pub output: Output,
    doc: ProblemDocHolder,
}

/// Source form of the problem, kept for canonical re-emission.
#[derive(Debug, Clone, PartialEq)]
struct ProblemDocHolder(Option<ProblemDoc>);

fn config_err(path: impl Into<String>, message: impl fmt::Display) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.to_string(),
    }
}

/// Parses a TOML document, or JSON when the first non-blank character is `{`.
pub fn parse_config(document: &str) -> Result<RunConfig, CliError> {
    parse_config_for(document, None)
}

/// As [`parse_config`]; `subcommand` fills in or must agree with the
/// document's own entry.
pub fn parse_config_for(
    document: &str,
    subcommand: Option<Subcommand>,
) -> Result<RunConfig, CliError> {
    let doc: RunDoc = if document.trim_start().starts_with('{') {
        serde_json::from_str(document).map_err(|e| config_err("<document>", e))?
    } else {
        toml::from_str(document).map_err(|e| config_err("<document>", e.to_string().trim_end()))?
    };
    let sub = match (doc.subcommand, subcommand) {
        (Some(a), Some(b)) if a != b => {
            return Err(config_err(
                "subcommand",
                format!("document selects `{a}` but `{b}` was requested"),
            ))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(config_err("subcommand", "missing")),
    };
    validate_params(sub, &doc.params)?;
    let problem = match (&doc.problem, sub.needs_problem()) {
        (None, true) => return Err(config_err("problem", format!("required by `{sub}`"))),
        (None, false) => None,
        (Some(pd), _) => Some(build_problem(pd, sub.uses_cells())?),
    };
    if sub == Subcommand::Pfunc && doc.params.p.is_none() && problem.is_none() {
        return Err(config_err(
            "params.p",
            "required by `pfunc` when no problem is given",
        ));
    }
    Ok(RunConfig {
        subcommand: sub,
        problem,
        params: doc.params,
        output: doc.output,
        doc: ProblemDocHolder(doc.problem),
    })
}

fn validate_params(sub: Subcommand, p: &Params) -> Result<(), CliError> {
    if let Some(tol) = p.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(config_err(
                "params.tol",
                format!("must be positive, got {tol}"),
            ));
        }
    }
    for (name, v) in [
        ("params.k", p.k),
        ("params.k_max", p.k_max),
        ("params.samples", p.samples),
        ("params.tuples", p.tuples),
        ("params.max_iter", p.max_iter),
    ] {
        if v == Some(0) {
            return Err(config_err(name, "must be at least 1"));
        }
    }
    if let Some(n) = p.n {
        if n < 16 {
            return Err(config_err(
                "params.n",
                format!("mesh needs at least 16 elements, got {n}"),
            ));
        }
    }
    if let Some(pv) = p.p {
        Exponent::new(pv).map_err(|e| config_err("params.p", e))?;
    }
    match &p.n_list {
        Some(list) => {
            if list.is_empty() {
                return Err(config_err("params.n_list", "must not be empty"));
            }
            if list.contains(&0) || list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_err(
                    "params.n_list",
                    "must be ascending positive integers",
                ));
            }
        }
        None if sub == Subcommand::Sweep => {
            return Err(config_err("params.n_list", "required by `sweep`"));
        }
        None => {}
    }
    if let Some(ls) = &p.lambdas {
        if let Some(i) = ls.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(config_err(
                format!("params.lambdas[{i}]"),
                "must be positive",
            ));
        }
    }
    Ok(())
}

fn build_problem(pd: &ProblemDoc, cells: bool) -> Result<ProblemSpec, CliError> {
    let p = Exponent::new(pd.p).map_err(|e| config_err("problem.p", e))?;
    if !(pd.length.is_finite() && pd.length > 0.0) {
        return Err(config_err(
            "problem.length",
            format!("must be positive, got {}", pd.length),
        ));
    }
    let span = if cells { 1.0 } else { pd.length };
    let a = build_coefficient(&pd.a, span, "problem.a")?;
    let rho = build_coefficient(&pd.rho, span, "problem.rho")?;
    if cells {
        CellProblem::new(pd.length, p, a, rho)
            .map(ProblemSpec::Cells)
            .map_err(|e| config_err("problem", e))
    } else {
        Problem::new(pd.length, p, a, rho)
            .map(ProblemSpec::Interval)
            .map_err(|e| config_err("problem", e))
    }
}

fn build_coefficient(c: &CoefficientDoc, span: f64, path: &str) -> Result<Coefficient, CliError> {
    let field = |name: &str| format!("{path}.{name}");
    if let Some(vals) = &c.values {
        if let Some(i) = vals.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(config_err(
                format!("{path}.values[{i}]"),
                format!(
                    "coefficient values must be strictly positive, got {}",
                    vals[i]
                ),
            ));
        }
    }
    let profile = |kind: &CoefficientKind| -> Result<Coefficient, CliError> {
        let bps = c
            .breakpoints
            .clone()
            .ok_or_else(|| config_err(field("breakpoints"), "missing"))?;
        let vals = c
            .values
            .clone()
            .ok_or_else(|| config_err(field("values"), "missing"))?;
        let r = match kind {
            CoefficientKind::PiecewiseConstant => Coefficient::piecewise_constant(bps, vals),
            CoefficientKind::PiecewiseLinear => Coefficient::piecewise_linear(bps, vals),
            _ => unreachable!(),
        };
        r.map_err(|e| config_err(path, e))
    };
    match c.kind {
        CoefficientKind::Constant => {
            let v = c
                .value
                .ok_or_else(|| config_err(field("value"), "missing"))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(
                    field("value"),
                    format!("coefficient must be strictly positive, got {v}"),
                ));
            }
            Coefficient::constant(v, span).map_err(|e| config_err(path, e))
        }
        CoefficientKind::PiecewiseConstant | CoefficientKind::PiecewiseLinear => profile(&c.kind),
        CoefficientKind::Periodic => {
            let period = c
                .period
                .ok_or_else(|| config_err(field("period"), "missing"))?;
            let kind = c
                .cell_kind
                .clone()
                .unwrap_or(CoefficientKind::PiecewiseConstant);
            if matches!(kind, CoefficientKind::Constant | CoefficientKind::Periodic) {
                return Err(config_err(
                    field("cell_kind"),
                    "must be piecewise-constant or piecewise-linear",
                ));
            }
            Coefficient::periodic(profile(&kind)?, period).map_err(|e| config_err(path, e))
        }
    }
}

impl RunConfig {
    /// Canonical TOML rendering; parsing it yields an equal configuration.
    pub fn to_canonical(&self) -> String {
        let doc = RunDoc {
            subcommand: Some(self.subcommand),
            problem: self.doc.0.clone(),
            params: self.params.clone(),
            output: self.output.clone(),
        };
        toml::to_string(&doc).expect("configuration documents always serialize")
    }

    pub fn interval_problem(&self) -> Option<&Problem> {
        match &self.problem {
            Some(ProblemSpec::Interval(p)) => Some(p),
            _ => None,
        }
    }

    pub fn cell_problem(&self) -> Option<&CellProblem> {
        match &self.problem {
            Some(ProblemSpec::Cells(c)) => Some(c),
            _ => None,
        }
    }
}
