use plap_core::homog::{convergence_report, sweep_epsilon_with, CellProblem};
use plap_core::pfunc::PTrig;
use plap_core::rayleigh::{
    check_nodal_measure, check_weyl, lambda2_equalize_with, minimize_lambda1, minimize_lambda1_with,
};
use plap_core::shoot::weyl_bounds;
use plap_core::{
    effective_coefficient, effective_weight, homogenized_eigenvalue, picone_lr, solve_k_with,
    Eigenpair, Exponent, Method, Problem, Rk4Options, SolveOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::config::{MethodName, Params, RunConfig, Subcommand};
use crate::error::CliError;
use crate::render::{num, Table};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_FEM_TOL: f64 = 1e-8;
pub const DEFAULT_MESH: usize = 400;
pub const DEFAULT_SAMPLES: usize = 201;
pub const DEFAULT_TUPLES: usize = 10_000;

/// Rendered data plus whether a checked bound failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub violation: bool,
    /// Diagnostics for the error stream.
    pub notes: Vec<String>,
}

/// Executes the configured subcommand and renders its table in the
/// configured format.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut notes = Vec::new();
    let (table, violation) = match cfg.subcommand {
        Subcommand::Pfunc => (pfunc(cfg)?, false),
        Subcommand::Solve => (solve(interval(cfg)?, &cfg.params, &mut notes)?, false),
        Subcommand::Lambda1Fem => (lambda1_fem(interval(cfg)?, &cfg.params, &mut notes)?, false),
        Subcommand::Lambda2Eq => (lambda2_eq(interval(cfg)?, &cfg.params)?, false),
        Subcommand::CheckBounds => check_bounds(interval(cfg)?, &cfg.params, &mut notes)?,
        Subcommand::Picone => picone(interval(cfg)?, &cfg.params)?,
        Subcommand::Homogenize => (homogenize(cells(cfg)?, &cfg.params)?, false),
        Subcommand::Sweep => (sweep(cells(cfg)?, &cfg.params, &mut notes)?, false),
    };
    Ok(Outcome {
        body: table.render(cfg.output.format, &cfg.subcommand.to_string()),
        violation,
        notes,
    })
}

fn interval(cfg: &RunConfig) -> Result<&Problem, CliError> {
    cfg.interval_problem().ok_or_else(|| CliError::Config {
        path: "problem".into(),
        message: format!("`{}` needs a problem on [0, length]", cfg.subcommand),
    })
}

fn cells(cfg: &RunConfig) -> Result<&CellProblem, CliError> {
    cfg.cell_problem().ok_or_else(|| CliError::Config {
        path: "problem".into(),
        message: format!("`{}` needs unit-cell coefficients", cfg.subcommand),
    })
}

fn solve_options(params: &Params) -> SolveOptions {
    let method = match params.method.unwrap_or(MethodName::Auto) {
        MethodName::Auto => Method::Auto,
        MethodName::Exact => Method::Exact,
        MethodName::Rk4 => Method::RungeKutta(Rk4Options::default()),
    };
    let defaults = SolveOptions::default();
    SolveOptions {
        method,
        max_iter: params.max_iter.unwrap_or(defaults.max_iter),
        ..defaults
    }
}

fn index_range(params: &Params) -> Result<std::ops::RangeInclusive<usize>, CliError> {
    let k = params.k.unwrap_or(1);
    let k_max = params.k_max.unwrap_or(k);
    if k_max < k {
        return Err(CliError::Config {
            path: "params.k_max".into(),
            message: format!("must be at least k = {k}"),
        });
    }
    Ok(k..=k_max)
}

fn pfunc(cfg: &RunConfig) -> Result<Table, CliError> {
    let pv = cfg
        .params
        .p
        .or(cfg.interval_problem().map(|p| p.p.value()))
        .or(cfg.cell_problem().map(|c| c.p.value()))
        .expect("validated at parse time");
    let p = Exponent::new(pv)?;
    let trig = PTrig::shared(p);
    let n = cfg.params.samples.unwrap_or(DEFAULT_SAMPLES).max(2);
    let mut t = Table::new(&["x", "sin_p", "dsin_p", "first_integral"]);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let x = 2.0 * trig.pi_p() * i as f64 / (n - 1) as f64;
        let (s, c) = trig.sin_cos(x);
        let h = (pv - 1.0) * c.abs().powf(pv) + s.abs().powf(pv);
        worst = worst.max((h - 1.0).abs());
        t.push(vec![x.into(), s.into(), c.into(), h.into()]);
    }
    t.summarize("p", num(pv));
    t.summarize("pi_p", num(trig.pi_p()));
    t.summarize("max_first_integral_residual", num(worst));
    Ok(t)
}

fn solve_range(
    prob: &Problem,
    params: &Params,
    notes: &mut Vec<String>,
) -> Result<Vec<Eigenpair>, CliError> {
    let tol = params.tol.unwrap_or(DEFAULT_TOL);
    let opts = solve_options(params);
    index_range(params)?
        .map(|k| {
            let ep = solve_k_with(prob, k, tol, &opts)?;
            notes.push(format!(
                "k = {k}: λ = {}, zeros = {:?}",
                ep.lambda, ep.zeros
            ));
            Ok(ep)
        })
        .collect()
}

fn solve(prob: &Problem, params: &Params, notes: &mut Vec<String>) -> Result<Table, CliError> {
    let mut t = Table::new(&["k", "lambda", "interior_zeros", "weyl_lower", "weyl_upper"]);
    for ep in solve_range(prob, params, notes)? {
        let (lo, hi) = weyl_bounds(prob, ep.k);
        t.push(vec![
            ep.k.into(),
            ep.lambda.into(),
            ep.zeros.len().into(),
            lo.into(),
            hi.into(),
        ]);
    }
    t.summarize("tol", num(params.tol.unwrap_or(DEFAULT_TOL)));
    Ok(t)
}

fn lambda1_fem(
    prob: &Problem,
    params: &Params,
    notes: &mut Vec<String>,
) -> Result<Table, CliError> {
    let n = params.n.unwrap_or(DEFAULT_MESH);
    let tol = params.tol.unwrap_or(DEFAULT_FEM_TOL);
    let r = match params.max_iter {
        Some(m) => minimize_lambda1_with(prob, n, tol, m)?,
        None => minimize_lambda1(prob, n, tol)?,
    };
    if r.noise_limited {
        notes.push(format!(
            "gradient norm {:e} is at the rounding floor",
            r.gradient_norm
        ));
    }
    notes.push(format!("descent stopped after {} iterations", r.iterations));
    let mut t = Table::new(&["n", "lambda1", "iterations", "gradient_norm"]);
    t.push(vec![
        n.into(),
        r.lambda1.into(),
        r.iterations.into(),
        r.gradient_norm.into(),
    ]);
    t.summarize("tol", num(tol));
    t.summarize("noise_limited", Value::from(r.noise_limited));
    Ok(t)
}

fn lambda2_eq(prob: &Problem, params: &Params) -> Result<Table, CliError> {
    let tol = params.tol.unwrap_or(DEFAULT_TOL);
    let r = lambda2_equalize_with(prob, tol, &solve_options(params))?;
    let mut t = Table::new(&["lambda2", "c_star", "iterations"]);
    t.push(vec![r.lambda2.into(), r.c_star.into(), r.iterations.into()]);
    t.summarize("tol", num(tol));
    Ok(t)
}

fn check_bounds(
    prob: &Problem,
    params: &Params,
    notes: &mut Vec<String>,
) -> Result<(Table, bool), CliError> {
    let mut eigs = match (&params.lambdas, params.k, params.k_max) {
        (Some(ls), None, None) => {
            let p = Params {
                k: Some(1),
                k_max: Some(ls.len()),
                ..params.clone()
            };
            solve_range(prob, &p, notes)?
        }
        (Some(_), _, _) => {
            return Err(CliError::Config {
                path: "params.lambdas".into(),
                message: "cannot be combined with k or k_max".into(),
            })
        }
        (None, _, _) => {
            let p = Params {
                k: Some(1),
                k_max: Some(params.k_max.or(params.k).unwrap_or(1)),
                ..params.clone()
            };
            solve_range(prob, &p, notes)?
        }
    };
    if let Some(ls) = &params.lambdas {
        for (ep, &l) in eigs.iter_mut().zip(ls) {
            ep.lambda = l;
        }
    }
    let weyl = check_weyl(prob, &eigs);
    let mut t = Table::new(&[
        "k",
        "lambda",
        "weyl_lower",
        "weyl_upper",
        "margin_lower",
        "margin_upper",
        "nodal_bound",
        "min_nodal_length",
        "ok",
    ]);
    let mut violation = false;
    for (row, ep) in weyl.rows.iter().zip(&eigs) {
        let nodal = check_nodal_measure(prob, ep);
        let ok = row.ok && nodal.ok;
        violation |= !ok;
        t.push(vec![
            row.k.into(),
            row.lambda.into(),
            row.lower.into(),
            row.upper.into(),
            row.margin_lower.into(),
            row.margin_upper.into(),
            nodal.bound.into(),
            nodal.min_length.into(),
            ok.into(),
        ]);
    }
    t.summarize("all_ok", Value::from(!violation));
    Ok((t, violation))
}

fn picone(prob: &Problem, params: &Params) -> Result<(Table, bool), CliError> {
    let n = params.tuples.unwrap_or(DEFAULT_TUPLES);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.unwrap_or(0));
    let p = prob.p;
    let mut max_residual: f64 = 0.0;
    let mut min_l = f64::INFINITY;
    let mut max_prop: f64 = 0.0;
    let mut ok = true;
    for _ in 0..n {
        let a = prob.a.eval(rng.gen_range(0.0..prob.length))?;
        let u = rng.gen_range(0.0..1.0);
        let du = rng.gen_range(-2.0..2.0);
        let v = rng.gen_range(0.5..1.5);
        let dv = rng.gen_range(-2.0..2.0);
        let (l, r) = picone_lr(p, a, u, du, v, dv)?;
        let res = (l - r).abs();
        max_residual = max_residual.max(res);
        min_l = min_l.min(l);
        ok &= res <= 1e-12 * (1.0 + l.abs()) && l >= -1e-12;
        let c = rng.gen_range(0.0..2.0);
        let (lp, _) = picone_lr(p, a, c * v, c * dv, v, dv)?;
        max_prop = max_prop.max(lp.abs());
        ok &= lp.abs() <= 1e-12;
    }
    let mut t = Table::new(&[
        "tuples",
        "max_residual",
        "min_l",
        "max_proportional_l",
        "ok",
    ]);
    t.push(vec![
        n.into(),
        max_residual.into(),
        min_l.into(),
        max_prop.into(),
        ok.into(),
    ]);
    t.summarize("p", num(p.value()));
    Ok((t, !ok))
}

fn homogenize(cells: &CellProblem, params: &Params) -> Result<Table, CliError> {
    let a_star = effective_coefficient(&cells.a_cell, cells.p)?;
    let rho_star = effective_weight(&cells.rho_cell)?;
    let mut t = Table::new(&["k", "a_star", "rho_star", "lambda_star"]);
    for k in index_range(params)? {
        let l = homogenized_eigenvalue(a_star, rho_star, cells.p, cells.length, k);
        t.push(vec![k.into(), a_star.into(), rho_star.into(), l.into()]);
    }
    t.summarize("p", num(cells.p.value()));
    Ok(t)
}

fn sweep(cells: &CellProblem, params: &Params, notes: &mut Vec<String>) -> Result<Table, CliError> {
    let k = params.k.unwrap_or(1);
    let tol = params.tol.unwrap_or(DEFAULT_TOL);
    let n_list = params.n_list.as_deref().expect("validated at parse time");
    let s = sweep_epsilon_with(cells, k, n_list, tol, &solve_options(params))?;
    for f in &s.failures {
        notes.push(format!("n = {}: {}", f.n, f.message));
    }
    if s.ns.is_empty() {
        return Err(CliError::Solver(plap_core::Error::NonConvergence(format!(
            "every sweep point failed; first: {}",
            s.failures[0].message
        ))));
    }
    let mut t = Table::new(&["n", "epsilon", "lambda", "rel_error"]);
    for i in 0..s.ns.len() {
        t.push(vec![
            s.ns[i].into(),
            s.epsilons[i].into(),
            s.lambdas[i].into(),
            s.rel_errors[i].into(),
        ]);
    }
    let weyl_ok = s
        .lambdas
        .iter()
        .zip(&s.weyl)
        .all(|(l, (lo, hi))| lo <= l && l <= hi);
    t.summarize("k", Value::from(k));
    t.summarize("lambda_star", num(s.lambda_star));
    t.summarize("weyl_ok", Value::from(weyl_ok));
    t.summarize(
        "failed_n",
        Value::from(s.failures.iter().map(|f| f.n).collect::<Vec<_>>()),
    );
    if let Ok(rep) = convergence_report(&s) {
        t.summarize("monotone", Value::from(rep.monotone));
        t.summarize("at_noise_floor", Value::from(rep.at_noise_floor));
        t.summarize("order", rep.order.map_or(Value::Null, num));
    }
    Ok(t)
}
