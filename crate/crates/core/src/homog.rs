//! Periodic homogenization in one dimension: effective coefficients of a unit
//! cell and ε-sweeps of the oscillating problems toward the effective one.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pfunc::{Exponent, PTrig};
use crate::problem::{Coefficient, Eigenpair, Problem};
use crate::shoot::{solve_k_with, weyl_bounds, SolveOptions};

fn check_cell(cell: &Coefficient) -> Result<()> {
    if cell.period().is_some() {
        return Err(Error::Domain(
            "cell must be a profile on [0, 1], not a periodic coefficient".into(),
        ));
    }
    let (x0, x1) = cell.domain();
    if x0 != 0.0 || x1 != 1.0 {
        return Err(Error::Domain(format!(
            "unit cell must span [0, 1], got [{x0}, {x1}]"
        )));
    }
    if !(cell.lower() > 0.0) {
        return Err(Error::Domain(
            "cell values must be strictly positive".into(),
        ));
    }
    Ok(())
}

/// `(∫₀¹ a^{-1/(p-1)})^{-(p-1)}`.
pub fn effective_coefficient(a_cell: &Coefficient, p: Exponent) -> Result<f64> {
    check_cell(a_cell)?;
    let e = -1.0 / (p.value() - 1.0);
    let mean = a_cell.integrate_map(0.0, 1.0, |a| a.powf(e));
    Ok(mean.powf(-(p.value() - 1.0)))
}

/// Cell average of the weight.
pub fn effective_weight(rho_cell: &Coefficient) -> Result<f64> {
    check_cell(rho_cell)?;
    Ok(rho_cell.integrate_map(0.0, 1.0, |r| r))
}

/// `(a*/ρ*)(π_p k/ℓ)^p`.
pub fn homogenized_eigenvalue(a_star: f64, rho_star: f64, p: Exponent, ell: f64, k: usize) -> f64 {
    let pi_p = PTrig::shared(p).pi_p();
    a_star / rho_star * (pi_p * k as f64 / ell).powf(p.value())
}

/// Interval length, exponent and unit cells of a periodic family.
#[derive(Debug, Clone, PartialEq)]
pub struct CellProblem {
    pub length: f64,
    pub p: Exponent,
    pub a_cell: Coefficient,
    pub rho_cell: Coefficient,
}

impl CellProblem {
    pub fn new(
        length: f64,
        p: Exponent,
        a_cell: Coefficient,
        rho_cell: Coefficient,
    ) -> Result<CellProblem> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Domain(format!(
                "length must be positive, got {length}"
            )));
        }
        check_cell(&a_cell)?;
        check_cell(&rho_cell)?;
        Ok(CellProblem {
            length,
            p,
            a_cell,
            rho_cell,
        })
    }

    /// Oscillating problem with `n` whole cells of period `ℓ/n`.
    pub fn at(&self, n: usize) -> Result<Problem> {
        if n == 0 {
            return Err(Error::Domain("cell count must be positive".into()));
        }
        let eps = self.length / n as f64;
        Problem::new(
            self.length,
            self.p,
            Coefficient::periodic(self.a_cell.clone(), eps)?,
            Coefficient::periodic(self.rho_cell.clone(), eps)?,
        )
    }

    /// Effective constant-coefficient problem.
    pub fn limit(&self) -> Result<Problem> {
        let a = effective_coefficient(&self.a_cell, self.p)?;
        let rho = effective_weight(&self.rho_cell)?;
        Problem::constant(self.length, self.p, a, rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub n: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub k: usize,
    pub tol: f64,
    pub ns: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub lambda_star: f64,
    pub rel_errors: Vec<f64>,
    /// Weyl bracket of each oscillating problem, in the order of `ns`.
    pub weyl: Vec<(f64, f64)>,
    /// Cell counts whose solve failed; they are absent from the lists above.
    pub failures: Vec<SweepFailure>,
    /// Eigenpair at the finest successful ε.
    #[serde(skip)]
    pub finest: Option<Eigenpair>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,epsilon,lambda,rel_error\n");
        for i in 0..self.ns.len() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                self.ns[i], self.epsilons[i], self.lambdas[i], self.rel_errors[i]
            ));
        }
        out
    }
}

/// Solves the k-th eigenvalue for every `n` in `n_list` (in parallel) and
/// compares with the effective problem.
pub fn sweep_epsilon(
    cells: &CellProblem,
    k: usize,
    n_list: &[usize],
    tol: f64,
) -> Result<SweepResult> {
    sweep_epsilon_with(cells, k, n_list, tol, &SolveOptions::default())
}

pub fn sweep_epsilon_with(
    cells: &CellProblem,
    k: usize,
    n_list: &[usize],
    tol: f64,
    opts: &SolveOptions,
) -> Result<SweepResult> {
    if k == 0 {
        return Err(Error::Domain("eigenvalue index starts at 1".into()));
    }
    if n_list.is_empty() || n_list.contains(&0) || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!(
            "n_list must be ascending positive integers, got {n_list:?}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let lambda_star = {
        let lim = cells.limit()?;
        homogenized_eigenvalue(lim.a.lower(), lim.rho.lower(), cells.p, cells.length, k)
    };
    let solved: Vec<(usize, Result<(Problem, Eigenpair)>)> = n_list
        .par_iter()
        .map(|&n| {
            let r = cells
                .at(n)
                .and_then(|prob| solve_k_with(&prob, k, tol, opts).map(|ep| (prob, ep)));
            (n, r)
        })
        .collect();

    let mut res = SweepResult {
        k,
        tol,
        ns: Vec::new(),
        epsilons: Vec::new(),
        lambdas: Vec::new(),
        lambda_star,
        rel_errors: Vec::new(),
        weyl: Vec::new(),
        failures: Vec::new(),
        finest: None,
    };
    for (n, r) in solved {
        match r {
            Ok((prob, ep)) => {
                res.ns.push(n);
                res.epsilons.push(cells.length / n as f64);
                res.lambdas.push(ep.lambda);
                res.rel_errors
                    .push((ep.lambda - lambda_star).abs() / lambda_star);
                res.weyl.push(weyl_bounds(&prob, k));
                res.finest = Some(ep);
            }
            Err(e) => res.failures.push(SweepFailure {
                n,
                message: e.to_string(),
            }),
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub epsilon: f64,
    pub lambda: f64,
    pub rel_error: f64,
    /// `log(e_{i-1}/e_i) / log(n_i/n_{i-1})`; absent for the first row and
    /// when either error sits at the solver noise floor.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub k: usize,
    pub lambda_star: f64,
    pub rows: Vec<ReportRow>,
    /// Indices `i` with `e_i > e_{i-1}` among rows above the noise floor.
    pub non_monotone_at: Vec<usize>,
    pub monotone: bool,
    /// Every error is at the noise floor.
    pub at_noise_floor: bool,
    /// Order from the last two rows, when defined.
    pub order: Option<f64>,
}

/// Errors below this multiple of the solver tolerance carry no rate information.
const NOISE_FACTOR: f64 = 10.0;

pub fn convergence_report(s: &SweepResult) -> Result<ConvergenceReport> {
    if s.ns.len() < 3 {
        return Err(Error::Precondition(format!(
            "convergence report needs at least 3 sweep points, got {}",
            s.ns.len()
        )));
    }
    let floor = NOISE_FACTOR * s.tol;
    let mut rows = Vec::with_capacity(s.ns.len());
    let mut non_monotone_at = Vec::new();
    for i in 0..s.ns.len() {
        let e = s.rel_errors[i];
        let order = (i > 0 && e > floor && s.rel_errors[i - 1] > floor)
            .then(|| (s.rel_errors[i - 1] / e).ln() / (s.ns[i] as f64 / s.ns[i - 1] as f64).ln());
        if i > 0 && e > floor && e > s.rel_errors[i - 1] {
            non_monotone_at.push(i);
        }
        rows.push(ReportRow {
            n: s.ns[i],
            epsilon: s.epsilons[i],
            lambda: s.lambdas[i],
            rel_error: e,
            order,
        });
    }
    let order = rows.last().and_then(|r| r.order);
    Ok(ConvergenceReport {
        k: s.k,
        lambda_star: s.lambda_star,
        monotone: non_monotone_at.is_empty(),
        non_monotone_at,
        at_noise_floor: s.rel_errors.iter().all(|&e| e <= floor),
        order,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn halves(a: f64, b: f64) -> Coefficient {
        Coefficient::piecewise_constant(vec![0.0, 0.5, 1.0], vec![a, b]).unwrap()
    }

    fn unit() -> Coefficient {
        Coefficient::constant(1.0, 1.0).unwrap()
    }

    #[test]
    fn effective_values() {
        assert_eq!(
            effective_coefficient(&Coefficient::constant(2.5, 1.0).unwrap(), e(3.0)).unwrap(),
            2.5
        );
        assert!((effective_coefficient(&halves(1.0, 4.0), e(2.0)).unwrap() - 1.6).abs() < 1e-15);
        assert!(
            (effective_coefficient(&halves(1.0, 4.0), e(3.0)).unwrap() - 16.0 / 9.0).abs() < 1e-14
        );
        assert_eq!(effective_weight(&halves(1.0, 3.0)).unwrap(), 2.0);
        let lin = Coefficient::piecewise_linear(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert!((effective_weight(&lin).unwrap() - 2.0).abs() < 1e-14);
        // harmonic mean of a linear profile: 2 / ln 3
        assert!((effective_coefficient(&lin, e(2.0)).unwrap() - 2.0 / 3f64.ln()).abs() < 1e-13);
        let off = Coefficient::piecewise_constant(vec![0.0, 2.0], vec![1.0]).unwrap();
        assert!(matches!(
            effective_coefficient(&off, e(2.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn homogenized_values() {
        assert!((homogenized_eigenvalue(1.0, 1.0, e(2.0), 1.0, 1) - PI * PI).abs() < 1e-13);
        assert!((homogenized_eigenvalue(1.6, 1.0, e(2.0), 1.0, 1) - 1.6 * PI * PI).abs() < 1e-12);
        let l1 = homogenized_eigenvalue(1.3, 0.7, e(3.0), 2.0, 2);
        let l2 = homogenized_eigenvalue(1.3, 0.7, e(3.0), 2.0, 4);
        assert!((l2 / l1 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn constant_cells_sweep() {
        let cells = CellProblem::new(
            1.0,
            e(3.0),
            Coefficient::constant(2.0, 1.0).unwrap(),
            unit(),
        )
        .unwrap();
        let s = sweep_epsilon(&cells, 2, &[2, 4, 8], 1e-11).unwrap();
        assert!(
            s.rel_errors.iter().all(|&e| e <= 1e-10),
            "{:?}",
            s.rel_errors
        );
        let rep = convergence_report(&s).unwrap();
        assert!(rep.at_noise_floor && rep.order.is_none());
    }

    #[test]
    fn two_phase_sweep_and_report() {
        let cells = CellProblem::new(1.0, e(2.0), halves(1.0, 4.0), unit()).unwrap();
        let s = sweep_epsilon(&cells, 1, &[2, 4, 8, 16, 32, 64], 1e-12).unwrap();
        assert!((s.lambda_star - 1.6 * PI * PI).abs() < 1e-12);
        assert!(
            s.rel_errors.windows(2).all(|w| w[1] < w[0]),
            "{:?}",
            s.rel_errors
        );
        assert!(*s.rel_errors.last().unwrap() < 0.05);
        for (l, (lo, hi)) in s.lambdas.iter().zip(&s.weyl) {
            assert!(lo <= l && l <= hi);
        }
        assert_eq!(s.finest.as_ref().unwrap().k, 1);
        let rep = convergence_report(&s).unwrap();
        assert!(rep.monotone);
        let order = rep.order.unwrap();
        assert!(order.is_finite() && order > 0.0);
        assert!(s.to_csv().starts_with("n,epsilon,lambda,rel_error\n2,"));

        let short = sweep_epsilon(&cells, 1, &[4], 1e-12).unwrap();
        assert!(matches!(
            convergence_report(&short),
            Err(Error::Precondition(_))
        ));
        assert!(sweep_epsilon(&cells, 1, &[4, 2], 1e-12).is_err());
    }

    #[test]
    fn report_flags_non_monotone() {
        let s = SweepResult {
            k: 1,
            tol: 1e-12,
            ns: vec![2, 4, 8],
            epsilons: vec![0.5, 0.25, 0.125],
            lambdas: vec![1.0; 3],
            lambda_star: 1.0,
            rel_errors: vec![1e-2, 1e-3, 2e-3],
            weyl: vec![(0.0, 2.0); 3],
            failures: vec![],
            finest: None,
        };
        let rep = convergence_report(&s).unwrap();
        assert!(!rep.monotone);
        assert_eq!(rep.non_monotone_at, vec![2]);
        assert!((rep.rows[1].order.unwrap() - 10f64.ln() / 2f64.ln()).abs() < 1e-12);
    }
}
