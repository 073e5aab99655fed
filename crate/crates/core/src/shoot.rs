//! Shooting for the Dirichlet eigenvalues.
//!
//! The equation is integrated as the first-order system in `u` and the flux
//! `v = a φ_p(u')`:
//!
//! ```text
//! u' = φ_p⁻¹(v / a),    v' = -λ ρ φ_p(u),    u(0) = 0, v(0) = 1.
//! ```
//!
//! `v` stays continuous across coefficient jumps. The k-th eigenvalue is the
//! unique `λ` for which the solution has `k - 1` interior zeros and vanishes
//! at `ℓ`; it is found by bisection on the zero count.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pfunc::{Exponent, PTrig};
use crate::problem::{lp_norm_p, phi_p, phi_p_inv, Eigenpair, Problem, Segment};

/// Sampled solution of the initial-value problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    /// Flux `a φ_p(u')`.
    pub v: Vec<f64>,
    /// Largest relative drift of the first integral over the constant pieces.
    pub hamiltonian_drift: f64,
    /// `u'` at the left and right end of each step, for Hermite dense output.
    /// Empty for plain samples, which are then interpolated linearly.
    #[serde(skip)]
    slopes: Vec<[f64; 2]>,
}

impl Trajectory {
    /// Wraps plain samples `(x_i, u_i)`; the flux column is left at zero.
    pub fn from_samples(grid: Vec<f64>, u: Vec<f64>) -> Result<Trajectory> {
        if grid.len() != u.len() || grid.len() < 2 {
            return Err(Error::Degenerate(
                "need at least two matching samples".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(
                "sample abscissae must be strictly increasing".into(),
            ));
        }
        let v = vec![0.0; grid.len()];
        Ok(Trajectory {
            grid,
            u,
            v,
            hamiltonian_drift: 0.0,
            slopes: Vec::new(),
        })
    }

    pub fn end(&self) -> (f64, f64) {
        (*self.u.last().unwrap(), *self.v.last().unwrap())
    }

    /// `x,u,v` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u,v\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(out, "{},{},{}", self.grid[i], self.u[i], self.v[i]);
        }
        out
    }

    /// Locates the sign change of `u` on step `i` by bisection.
    fn refine_zero(&self, i: usize) -> f64 {
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (u0, u1) = (self.u[i], self.u[i + 1]);
        if u1 == 0.0 {
            return x1;
        }
        let h = x1 - x0;
        let eval = |t: f64| -> f64 {
            match self.slopes.get(i) {
                Some(&[m0, m1]) => {
                    let t2 = t * t;
                    let t3 = t2 * t;
                    (2.0 * t3 - 3.0 * t2 + 1.0) * u0
                        + (t3 - 2.0 * t2 + t) * h * m0
                        + (-2.0 * t3 + 3.0 * t2) * u1
                        + (t3 - t2) * h * m1
                }
                None => u0 + t * (u1 - u0),
            }
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let s0 = u0.signum();
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if eval(mid).signum() == s0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x0 + 0.5 * (lo + hi) * h
    }
}

/// Interior zeros of `u` in ascending order, one per sign change.
///
/// Samples below `1e-13` of the largest `|u|` are treated as exact zeros, so
/// rounding noise at a node (in particular at `x = ℓ`) does not register as
/// a crossing.
pub fn interior_zeros(t: &Trajectory) -> Vec<f64> {
    let floor = 1e-13 * t.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sign = |x: f64| {
        if x > floor {
            1.0
        } else if x < -floor {
            -1.0
        } else {
            0.0
        }
    };
    let mut zeros = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for i in 0..t.u.len() {
        let s = sign(t.u[i]);
        if s == 0.0 {
            continue;
        }
        if let Some((j, ls)) = last {
            if s != ls {
                // a run of (near-)zero nodes between j and i: the first is the zero
                let z = if j + 1 < i {
                    t.grid[j + 1]
                } else {
                    t.refine_zero(j)
                };
                zeros.push(z);
            }
        }
        last = Some((i, s));
    }
    zeros
}

pub fn count_interior_zeros(t: &Trajectory) -> usize {
    interior_zeros(t).len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4Options {
    pub steps_per_unit: usize,
    /// Largest admissible relative drift of the per-piece first integral.
    pub drift_ceiling: f64,
    /// Step-doubling tolerance (relative to the running maxima of `|u|`, `|v|`)
    /// below which a grid step is accepted without halving. `f64::INFINITY`
    /// gives plain fixed-step RK4.
    pub local_tol: f64,
}

impl Default for Rk4Options {
    fn default() -> Self {
        Rk4Options {
            steps_per_unit: 10_000,
            drift_ceiling: 1e-8,
            local_tol: 1e-13,
        }
    }
}

/// First integral on a constant piece: `(1/p') a^{-1/(p-1)} |v|^{p'} + (λρ/p) |u|^p`.
fn hamiltonian(p: Exponent, a: f64, rho: f64, lambda: f64, u: f64, v: f64) -> f64 {
    let pv = p.value();
    let q = p.conj();
    a.powf(-1.0 / (pv - 1.0)) * v.abs().powf(q) / q + lambda * rho * u.abs().powf(pv) / pv
}

/// Fixed-step classical Runge–Kutta integration from `x = 0` with steps aligned
/// to the coefficient breakpoints. Uses the default drift ceiling.
pub fn integrate_ivp(
    prob: &Problem,
    lambda: f64,
    u0: f64,
    v0: f64,
    steps_per_unit: usize,
) -> Result<Trajectory> {
    integrate_ivp_with(
        prob,
        lambda,
        u0,
        v0,
        &Rk4Options {
            steps_per_unit,
            ..Rk4Options::default()
        },
    )
}

pub fn integrate_ivp_with(
    prob: &Problem,
    lambda: f64,
    u0: f64,
    v0: f64,
    opts: &Rk4Options,
) -> Result<Trajectory> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    if u0 == 0.0 && v0 == 0.0 {
        return Err(Error::Domain(
            "initial data (u0, v0) must not both vanish".into(),
        ));
    }
    if opts.steps_per_unit == 0 {
        return Err(Error::Domain("steps_per_unit must be positive".into()));
    }
    let p = prob.p;
    let pieces = prob.breakpoints();
    let total: usize = pieces
        .windows(2)
        .map(|w| steps_in(w[1] - w[0], opts.steps_per_unit))
        .sum();
    let mut grid = Vec::with_capacity(total + 1);
    let mut us = Vec::with_capacity(total + 1);
    let mut vs = Vec::with_capacity(total + 1);
    let mut slopes = Vec::with_capacity(total);
    grid.push(0.0);
    us.push(u0);
    vs.push(v0);
    let (mut u, mut v) = (u0, v0);
    let mut drift: f64 = 0.0;
    let (mut scale_u, mut scale_v) = (u0.abs(), v0.abs());

    for w in pieces.windows(2) {
        let (xa, xb) = (w[0], w[1]);
        let a_seg = prob.a.segment(xa, xb);
        let r_seg = prob.rho.segment(xa, xb);
        let n = steps_in(xb - xa, opts.steps_per_unit);
        let h = (xb - xa) / n as f64;
        let rhs = |x: f64, u: f64, v: f64| -> (f64, f64) {
            let a = a_seg.at(x);
            (phi_p_inv(p, v / a), -lambda * r_seg.at(x) * phi_p(p, u))
        };
        let constant = a_seg.is_constant() && r_seg.is_constant();
        let h0 = hamiltonian(p, a_seg.v0, r_seg.v0, lambda, u, v);
        for i in 0..n {
            let x = xa + i as f64 * h;
            let xe = if i + 1 == n { xb } else { x + h };
            let k1u = rhs(x, u, v).0;
            let mut step = Step {
                rhs: &rhs,
                tol: opts.local_tol,
                scale_u: &mut scale_u,
                scale_v: &mut scale_v,
            };
            let (un, vn) = step.advance(x, xe - x, u, v, 0);
            slopes.push([k1u, phi_p_inv(p, vn / a_seg.at(xe))]);
            u = un;
            v = vn;
            grid.push(xe);
            us.push(u);
            vs.push(v);
            if constant && h0 > 0.0 {
                let hn = hamiltonian(p, a_seg.v0, r_seg.v0, lambda, u, v);
                drift = drift.max((hn - h0).abs() / h0);
            }
        }
    }
    if !(drift <= opts.drift_ceiling) {
        return Err(Error::NonConvergence(format!(
            "first-integral drift {drift:.3e} exceeds ceiling {:.3e}; refine the step",
            opts.drift_ceiling
        )));
    }
    Ok(Trajectory {
        grid,
        u: us,
        v: vs,
        hamiltonian_drift: drift,
        slopes,
    })
}

const MAX_HALVINGS: u32 = 48;

/// One grid step of classical RK4. When `tol` is finite the step is checked
/// against two half steps and halved recursively until they agree; this only
/// triggers where `u` or `v` passes through zero and the right-hand side loses
/// its Lipschitz continuity (`p < 2` resp. `p > 2`).
struct Step<'a, F> {
    rhs: &'a F,
    tol: f64,
    scale_u: &'a mut f64,
    scale_v: &'a mut f64,
}

impl<F: Fn(f64, f64, f64) -> (f64, f64)> Step<'_, F> {
    fn rk4(&self, x: f64, h: f64, u: f64, v: f64, k1: (f64, f64)) -> (f64, f64) {
        let f = self.rhs;
        let (k1u, k1v) = k1;
        let (k2u, k2v) = f(x + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        let (k3u, k3v) = f(x + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        let (k4u, k4v) = f(x + h, u + h * k3u, v + h * k3v);
        (
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )
    }

    fn advance(&mut self, x: f64, h: f64, u: f64, v: f64, depth: u32) -> (f64, f64) {
        let k1 = (self.rhs)(x, u, v);
        let full = self.rk4(x, h, u, v, k1);
        if !self.tol.is_finite() {
            return full;
        }
        let mid = self.rk4(x, 0.5 * h, u, v, k1);
        let k1m = (self.rhs)(x + 0.5 * h, mid.0, mid.1);
        let two = self.rk4(x + 0.5 * h, 0.5 * h, mid.0, mid.1, k1m);
        *self.scale_u = self.scale_u.max(two.0.abs()).max(f64::MIN_POSITIVE);
        *self.scale_v = self.scale_v.max(two.1.abs()).max(f64::MIN_POSITIVE);
        let err =
            ((two.0 - full.0).abs() / *self.scale_u).max((two.1 - full.1).abs() / *self.scale_v);
        if err <= self.tol || depth >= MAX_HALVINGS {
            return two;
        }
        let (um, vm) = self.advance(x, 0.5 * h, u, v, depth + 1);
        self.advance(x + 0.5 * h, 0.5 * h, um, vm, depth + 1)
    }
}

fn steps_in(len: f64, per_unit: usize) -> usize {
    ((len * per_unit as f64).ceil() as usize).max(1)
}

/// One constant piece of an exactly propagated solution:
/// `u(x) = amp · sin_p(theta0 + omega (x - x0))` on `[x0, x1]`.
#[derive(Debug, Clone, Copy)]
struct Arc {
    x0: f64,
    x1: f64,
    amp: f64,
    theta0: f64,
    omega: f64,
    /// `u` and `u'` at `x0`, used when `omega == 0`.
    u0: f64,
    du: f64,
}

struct ExactSolution {
    arcs: Vec<Arc>,
    u_end: f64,
    v_end: f64,
    zeros: Vec<f64>,
}

fn constant_pieces(prob: &Problem) -> Result<Vec<(f64, f64, f64, f64)>> {
    if !prob.is_piecewise_constant() {
        return Err(Error::Domain(
            "exact propagation requires piecewise-constant a and rho".into(),
        ));
    }
    Ok(prob
        .breakpoints()
        .windows(2)
        .map(|w| {
            let a: Segment = prob.a.segment(w[0], w[1]);
            let r: Segment = prob.rho.segment(w[0], w[1]);
            (w[0], w[1], a.v0, r.v0)
        })
        .collect())
}

/// Closed-form transfer across the constant pieces: on each piece every
/// solution is `A sin_p(ω(x - x₀))` with `ω = (λρ/a)^{1/p}`, and `u`, `v`
/// are continuous at the joins.
fn propagate_exact(prob: &Problem, lambda: f64, u0: f64, v0: f64) -> Result<ExactSolution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    if u0 == 0.0 && v0 == 0.0 {
        return Err(Error::Domain(
            "initial data (u0, v0) must not both vanish".into(),
        ));
    }
    let pieces = constant_pieces(prob)?;
    let p = prob.p;
    let trig = PTrig::shared(p);
    let pi = trig.pi_p();
    let (mut u, mut v) = (u0, v0);
    let mut arcs = Vec::with_capacity(pieces.len());
    let mut zeros = Vec::new();
    for &(x0, x1, a, rho) in &pieces {
        let h = x1 - x0;
        let du = phi_p_inv(p, v / a);
        if lambda == 0.0 {
            let un = u + du * h;
            if u != 0.0 && un != 0.0 && (u < 0.0) != (un < 0.0) {
                zeros.push(x0 - u / du);
            }
            arcs.push(Arc {
                x0,
                x1,
                amp: 0.0,
                theta0: 0.0,
                omega: 0.0,
                u0: u,
                du,
            });
            u = un;
            continue;
        }
        let omega = (lambda * rho / a).powf(1.0 / p.value());
        let (amp, theta0) = trig.polar(u, du / omega);
        let theta1 = theta0 + omega * h;
        let first = (theta0 / pi).floor() as i64 + 1;
        let last = (theta1 / pi).floor() as i64;
        for m in first..=last {
            zeros.push(x0 + (m as f64 * pi - theta0) / omega);
        }
        let (s, c) = trig.sin_cos(theta1);
        u = amp * s;
        v = a * phi_p(p, amp * omega * c);
        arcs.push(Arc {
            x0,
            x1,
            amp,
            theta0,
            omega,
            u0: 0.0,
            du: 0.0,
        });
    }
    let end = prob.length;
    // a zero landing on x = ℓ (or outside, by rounding) is not interior
    while zeros.last().is_some_and(|&z| z >= end) {
        zeros.pop();
    }
    Ok(ExactSolution {
        arcs,
        u_end: u,
        v_end: v,
        zeros,
    })
}

impl ExactSolution {
    fn sample(&self, trig: &PTrig, x: f64) -> f64 {
        let i = self
            .arcs
            .partition_point(|a| a.x1 < x)
            .min(self.arcs.len() - 1);
        let arc = &self.arcs[i];
        if arc.omega == 0.0 {
            arc.u0 + arc.du * (x - arc.x0)
        } else {
            arc.amp * trig.sin(arc.theta0 + arc.omega * (x - arc.x0))
        }
    }
}

/// Endpoint values `(u(ℓ), v(ℓ))` and the number of interior zeros, obtained
/// by exact propagation through piecewise-constant coefficients.
pub fn exact_propagate_pc(
    prob: &Problem,
    lambda: f64,
    u0: f64,
    v0: f64,
) -> Result<(f64, f64, usize)> {
    let sol = propagate_exact(prob, lambda, u0, v0)?;
    Ok((sol.u_end, sol.v_end, sol.zeros.len()))
}

/// Weyl bracket `[α/ρ⁺ μ_k, β/ρ⁻ μ_k]`, widened by a factor 2 on each side.
pub fn bracket_k(prob: &Problem, k: usize) -> (f64, f64) {
    let (lo, hi) = weyl_bounds(prob, k);
    (0.5 * lo, 2.0 * hi)
}

/// Unwidened Weyl bounds `(α/ρ⁺ μ_k, β/ρ⁻ μ_k)`.
pub fn weyl_bounds(prob: &Problem, k: usize) -> (f64, f64) {
    let mu = prob.mu(k);
    (
        prob.a.lower() / prob.rho.upper() * mu,
        prob.a.upper() / prob.rho.lower() * mu,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Exact propagation for piecewise-constant problems, Runge–Kutta otherwise.
    Auto,
    RungeKutta(Rk4Options),
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    pub max_iter: usize,
    /// Number of uniform eigenfunction samples for the exact method
    /// (breakpoints are added on top).
    pub samples: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Auto,
            max_iter: 200,
            samples: 4001,
        }
    }
}

impl SolveOptions {
    fn resolved(&self, prob: &Problem) -> Method {
        match self.method {
            Method::Auto if prob.is_piecewise_constant() => Method::Exact,
            Method::Auto => Method::RungeKutta(Rk4Options::default()),
            m => m,
        }
    }
}

/// `true` when `λ` lies below the k-th eigenvalue: fewer than `k - 1`
/// interior zeros, or exactly `k - 1` with `u(ℓ)` still on the sign of the
/// last nodal arc.
fn below_kth(k: usize, zeros: usize, u_end: f64) -> bool {
    let expected_sign = if (k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    zeros + 1 < k || (zeros + 1 == k && expected_sign * u_end > 0.0)
}

/// Shooting solution at `λ` with `u(0) = 0`, `v(0) = 1`: `(zeros, u(ℓ))`.
fn shoot(prob: &Problem, method: Method, lambda: f64) -> Result<(usize, f64)> {
    match method {
        Method::RungeKutta(opts) => {
            let t = integrate_ivp_with(prob, lambda, 0.0, 1.0, &opts)?;
            Ok((count_interior_zeros(&t), t.end().0))
        }
        _ => {
            let (u, _, z) = exact_propagate_pc(prob, lambda, 0.0, 1.0)?;
            Ok((z, u))
        }
    }
}

/// The k-th eigenpair by bisection on the shooting predicate over
/// [`bracket_k`]; `tol` is the relative accuracy of `λ`.
pub fn solve_k(prob: &Problem, k: usize, tol: f64) -> Result<Eigenpair> {
    solve_k_with(prob, k, tol, &SolveOptions::default())
}

pub fn solve_k_with(prob: &Problem, k: usize, tol: f64, opts: &SolveOptions) -> Result<Eigenpair> {
    if k == 0 {
        return Err(Error::Domain("eigenvalue index k starts at 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let method = opts.resolved(prob);
    let (mut lo, mut hi) = bracket_k(prob, k);
    let (zl, ul) = shoot(prob, method, lo)?;
    if !below_kth(k, zl, ul) {
        return Err(Error::Bracket(format!(
            "lower bracket end {lo:.6e} already has {zl} interior zeros (k = {k})"
        )));
    }
    let (zh, uh) = shoot(prob, method, hi)?;
    if below_kth(k, zh, uh) {
        return Err(Error::Bracket(format!(
            "upper bracket end {hi:.6e} has only {zh} interior zeros (k = {k})"
        )));
    }
    let mut iter = 0;
    while hi - lo > tol * lo {
        if iter == opts.max_iter {
            return Err(Error::NonConvergence(format!(
                "bisection for k = {k} stalled at [{lo:.15e}, {hi:.15e}] after {iter} iterations"
            )));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (z, u) = shoot(prob, method, mid)?;
        if below_kth(k, z, u) {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
    }
    let lambda = 0.5 * (lo + hi);
    // the eigenfunction is taken from the lower end, where exactly k-1
    // interior zeros are guaranteed
    let (grid, mut u, zeros) = match method {
        Method::RungeKutta(o) => {
            let t = integrate_ivp_with(prob, lo, 0.0, 1.0, &o)?;
            let zeros = interior_zeros(&t);
            (t.grid, t.u, zeros)
        }
        _ => {
            let sol = propagate_exact(prob, lo, 0.0, 1.0)?;
            let trig = PTrig::shared(prob.p);
            let n = opts.samples.max(2);
            let mut grid: Vec<f64> = (0..n)
                .map(|i| prob.length * i as f64 / (n - 1) as f64)
                .collect();
            grid.extend(prob.breakpoints());
            let grid = crate::problem::merge_close(grid, prob.length);
            let u = grid.iter().map(|&x| sol.sample(&trig, x)).collect();
            (grid, u, sol.zeros)
        }
    };
    let norm = lp_norm_p(&grid, &u, prob.p).powf(1.0 / prob.p.value());
    if !(norm > 0.0) {
        return Err(Error::Degenerate(
            "eigenfunction vanished identically".into(),
        ));
    }
    u.iter_mut().for_each(|x| *x /= norm);
    if let Some(last) = u.last_mut() {
        *last = 0.0;
    }
    u[0] = 0.0;
    Ok(Eigenpair {
        k,
        lambda,
        grid,
        u,
        zeros,
    })
}

/// `solve_k` for `k = 1..=k_max`.
pub fn solve_first(
    prob: &Problem,
    k_max: usize,
    tol: f64,
    opts: &SolveOptions,
) -> Result<Vec<Eigenpair>> {
    use rayon::prelude::*;
    (1..=k_max)
        .into_par_iter()
        .map(|k| solve_k_with(prob, k, tol, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfunc::pi_p;
    use crate::problem::Coefficient;
    use std::f64::consts::PI;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn two_phase(p: f64) -> Problem {
        Problem::new(
            1.0,
            e(p),
            Coefficient::piecewise_constant(vec![0.0, 0.5, 1.0], vec![1.0, 4.0]).unwrap(),
            Coefficient::constant(1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn ivp_hits_first_eigenvalue_at_p2() {
        let prob = Problem::constant(1.0, e(2.0), 1.0, 1.0).unwrap();
        let t = integrate_ivp(&prob, PI * PI, 0.0, 1.0, 10_000).unwrap();
        assert!(t.end().0.abs() < 1e-6);
        assert!(t.hamiltonian_drift < 1e-8);
        assert_eq!(t.grid.len(), 10_001);
    }

    #[test]
    fn ivp_with_zero_lambda_is_linear() {
        let prob = two_phase(3.0);
        let t = integrate_ivp(&prob, 0.0, 0.0, 1.0, 1000).unwrap();
        for (x, (u, v)) in t.grid.iter().zip(t.u.iter().zip(&t.v)) {
            assert_eq!(*v, 1.0);
            // u' = φ_p⁻¹(1/a): 1 on the first half, 4^{-1/2} on the second
            let expected = if *x <= 0.5 { *x } else { 0.5 + 0.5 * (x - 0.5) };
            assert!((u - expected).abs() < 1e-13);
        }
        let c = Problem::constant(1.0, e(2.0), 1.0, 1.0).unwrap();
        let t = integrate_ivp(&c, 0.0, 0.0, 1.0, 100).unwrap();
        assert!(t.grid.iter().zip(&t.u).all(|(x, u)| (x - u).abs() < 1e-14));
    }

    #[test]
    fn ivp_p3_oracle() {
        let prob = Problem::constant(1.0, e(3.0), 1.0, 1.0).unwrap();
        let lambda = pi_p(e(3.0)).powi(3);
        let t = integrate_ivp(&prob, lambda, 0.0, 1.0, 10_000).unwrap();
        assert!(t.end().0.abs() < 1e-5, "{}", t.end().0);
    }

    #[test]
    fn ivp_rejects_bad_input() {
        let prob = two_phase(2.0);
        assert!(matches!(
            integrate_ivp(&prob, -1.0, 0.0, 1.0, 10),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            integrate_ivp(&prob, 1.0, 0.0, 0.0, 10),
            Err(Error::Domain(_))
        ));
        let strict = Rk4Options {
            steps_per_unit: 20,
            drift_ceiling: 1e-12,
            local_tol: f64::INFINITY,
        };
        assert!(matches!(
            integrate_ivp_with(&prob, 300.0, 0.0, 1.0, &strict),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn zero_counting() {
        let prob = Problem::constant(1.0, e(2.0), 1.0, 1.0).unwrap();
        let mu2 = 4.0 * PI * PI;
        let t = integrate_ivp(&prob, mu2 * 1.05, 0.0, 1.0, 5000).unwrap();
        assert_eq!(count_interior_zeros(&t), 2);
        let t = integrate_ivp(&prob, PI * PI * 0.9, 0.0, 1.0, 5000).unwrap();
        assert_eq!(count_interior_zeros(&t), 0);

        let p3 = e(3.0);
        let pi3 = pi_p(p3);
        let grid: Vec<f64> = (0..=300).map(|i| i as f64 / 300.0).collect();
        let u = grid
            .iter()
            .map(|&x| crate::pfunc::sin_p(p3, pi3 * 3.0 * x))
            .collect();
        let t = Trajectory::from_samples(grid, u).unwrap();
        let z = interior_zeros(&t);
        assert_eq!(z.len(), 2);
        assert!((z[0] - 1.0 / 3.0).abs() < 1e-3 && (z[1] - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn zero_exactly_on_a_node_counts_once() {
        let grid = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let t = Trajectory::from_samples(grid, vec![0.0, 1.0, 0.0, -1.0, 0.0]).unwrap();
        assert_eq!(interior_zeros(&t), vec![2.0]);
        // touching zero without a sign change is not a crossing
        let t =
            Trajectory::from_samples(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(count_interior_zeros(&t), 0);
    }

    #[test]
    fn brackets() {
        let prob = Problem::constant(1.0, e(2.0), 1.0, 1.0).unwrap();
        let (lo, hi) = bracket_k(&prob, 1);
        assert!(lo < PI * PI && PI * PI < hi);
        let (lo, hi) = bracket_k(&two_phase(2.0), 2);
        assert!(lo <= 4.0 * PI * PI && hi >= 16.0 * PI * PI);
        let c = Problem::constant(1.0, e(2.5), 3.0, 1.0).unwrap();
        let target = 3.0 * c.mu(3);
        let (lo, hi) = bracket_k(&c, 3);
        assert!(lo < target && target < hi);
    }

    #[test]
    fn solve_constant_examples() {
        let prob = Problem::constant(1.0, e(2.0), 1.0, 1.0).unwrap();
        let ep = solve_k(&prob, 3, 1e-12).unwrap();
        assert!((ep.lambda / (9.0 * PI * PI) - 1.0).abs() < 1e-8);
        assert_eq!(ep.zeros.len(), 2);
        let prob = Problem::constant(1.0, e(2.0), 2.0, 1.0).unwrap();
        let ep = solve_k(&prob, 1, 1e-12).unwrap();
        assert!((ep.lambda / (2.0 * PI * PI) - 1.0).abs() < 1e-8);
        let prob = Problem::constant(1.0, e(3.0), 1.0, 1.0).unwrap();
        let ep = solve_k(&prob, 1, 1e-12).unwrap();
        assert!((ep.lambda / pi_p(e(3.0)).powi(3) - 1.0).abs() < 1e-8);
        assert!((ep.lambda - 28.29).abs() < 0.01);
    }

    #[test]
    fn eigenfunction_normalization_matches_closed_form() {
        // u_k = (p/ℓ)^{1/p} sin_p(π_p k x/ℓ) has unit L^p norm since ∫₀^{π_p}|sin_p|^p = π_p/p
        for (p, k, ell) in [(1.5, 2, 1.0), (3.0, 3, 2.0)] {
            let prob = Problem::constant(ell, e(p), 1.0, 1.0).unwrap();
            let ep = solve_k(&prob, k, 1e-13).unwrap();
            let amp = (p / ell).powf(1.0 / p);
            let trig = PTrig::shared(e(p));
            let w = trig.pi_p() * k as f64 / ell;
            let err = ep
                .grid
                .iter()
                .zip(&ep.u)
                .map(|(x, u)| (u - amp * trig.sin(w * x)).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "p={p}: {err}");
            assert!((lp_norm_p(&ep.grid, &ep.u, e(p)) - 1.0).abs() < 1e-12);
            assert!(ep.u[1] > 0.0);
        }
    }

    #[test]
    fn exact_propagation_examples() {
        let prob = Problem::constant(1.0, e(2.5), 1.0, 1.0).unwrap();
        let (u, _, z) = exact_propagate_pc(&prob, prob.mu(1), 0.0, 1.0).unwrap();
        assert!(u.abs() < 1e-11);
        assert_eq!(z, 0);
        let prob = two_phase(3.0);
        let (_, v, z) = exact_propagate_pc(&prob, 0.0, 0.0, 0.7).unwrap();
        assert_eq!((v, z), (0.7, 0));
        let lin = Problem::new(
            1.0,
            e(2.0),
            Coefficient::piecewise_linear(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap(),
            Coefficient::constant(1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            exact_propagate_pc(&lin, 1.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exact_and_rk4_agree_on_two_phase() {
        for p in [1.5, 2.0, 3.0] {
            let prob = two_phase(p);
            for lambda in [3.0, 40.0, 170.0] {
                let (ue, ve, ze) = exact_propagate_pc(&prob, lambda, 0.0, 1.0).unwrap();
                let t = integrate_ivp(&prob, lambda, 0.0, 1.0, 10_000).unwrap();
                let (ur, vr) = t.end();
                assert!((ue - ur).abs() < 1e-6, "p={p} λ={lambda}: {ue} vs {ur}");
                assert!(
                    (ve - vr).abs() < 1e-5 * (1.0 + ve.abs()),
                    "p={p} λ={lambda}"
                );
                assert_eq!(ze, count_interior_zeros(&t));
            }
        }
    }

    #[test]
    fn rk4_solver_on_piecewise_linear() {
        // ρ scaling by c scales the spectrum by 1/c
        let a = Coefficient::piecewise_linear(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let rho = Coefficient::constant(1.0, 1.0).unwrap();
        let prob = Problem::new(1.0, e(2.0), a, rho.clone()).unwrap();
        let l1 = solve_k(&prob, 2, 1e-10).unwrap();
        let scaled = prob.with_rho(rho.scaled(3.0).unwrap()).unwrap();
        let l3 = solve_k(&scaled, 2, 1e-10).unwrap();
        assert!((l3.lambda * 3.0 / l1.lambda - 1.0).abs() < 1e-8);
        assert_eq!(l1.zeros.len(), 1);
        let (lo, hi) = weyl_bounds(&prob, 2);
        assert!(lo <= l1.lambda && l1.lambda <= hi);
    }

    #[test]
    fn solve_rejects_bad_arguments() {
        let prob = two_phase(2.0);
        assert!(matches!(solve_k(&prob, 0, 1e-8), Err(Error::Domain(_))));
        assert!(matches!(solve_k(&prob, 1, 0.0), Err(Error::Domain(_))));
        let opts = SolveOptions {
            max_iter: 3,
            ..SolveOptions::default()
        };
        assert!(matches!(
            solve_k_with(&prob, 1, 1e-12, &opts),
            Err(Error::NonConvergence(_))
        ));
    }
}
