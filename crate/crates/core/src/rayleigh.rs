//! Variational cross-checks: the discrete Rayleigh quotient and its minimizer,
//! the nodal-equalization route to `λ₂`, and the Weyl and nodal-measure
//! bound checkers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pfunc::{Exponent, PTrig};
use crate::problem::{merge_close, phi_p, Eigenpair, Problem};
use crate::shoot::{solve_k_with, weyl_bounds, SolveOptions};

/// P1 mesh on `[0, ℓ]`: `n` uniform elements plus the coefficient breakpoints,
/// with `a` and `ρ` sampled at element midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<f64>,
    pub a: Vec<f64>,
    pub rho: Vec<f64>,
}

impl Mesh {
    pub fn new(prob: &Problem, n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::Domain("mesh needs at least one element".into()));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| prob.length * i as f64 / n as f64).collect();
        nodes.extend(prob.breakpoints());
        let nodes = merge_close(nodes, prob.length);
        let mids = nodes.windows(2).map(|w| (w[0], w[1]));
        let (a, rho) = mids
            .map(|(x0, x1)| {
                let mid = 0.5 * (x0 + x1);
                (
                    prob.a.segment(x0, x1).at(mid),
                    prob.rho.segment(x0, x1).at(mid),
                )
            })
            .unzip();
        Ok(Mesh { nodes, a, rho })
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    fn h(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    /// Numerator `Σ a_e |ΔU_e/h_e|^p h_e` and denominator `Σ ρ_e |Ū_e|^p h_e`.
    fn energies(&self, p: Exponent, u: &[f64]) -> (f64, f64) {
        let pv = p.value();
        let mut num = 0.0;
        let mut den = 0.0;
        for e in 0..self.elements() {
            let h = self.h(e);
            let slope = (u[e + 1] - u[e]) / h;
            let mid = 0.5 * (u[e] + u[e + 1]);
            num += self.a[e] * slope.abs().powf(pv) * h;
            den += self.rho[e] * mid.abs().powf(pv) * h;
        }
        (num, den)
    }

    /// Gradient of the quotient with respect to all nodal values; the two
    /// boundary entries are zero.
    fn quotient_gradient(&self, p: Exponent, u: &[f64]) -> (f64, Vec<f64>) {
        let pv = p.value();
        let (num, den) = self.energies(p, u);
        let q = num / den;
        let mut g = vec![0.0; u.len()];
        for e in 0..self.elements() {
            let h = self.h(e);
            let flux = pv * self.a[e] * phi_p(p, (u[e + 1] - u[e]) / h);
            let mass = 0.5 * pv * self.rho[e] * phi_p(p, 0.5 * (u[e] + u[e + 1])) * h;
            g[e] += -flux - q * mass;
            g[e + 1] += flux - q * mass;
        }
        let last = g.len() - 1;
        g[0] = 0.0;
        g[last] = 0.0;
        g.iter_mut().for_each(|x| *x /= den);
        (q, g)
    }

    /// Solves `K w = g` on the interior nodes, where `K` is the P1 stiffness
    /// matrix with element weights `k_e`, `K_ij = Σ_e k_e ∫ φ_i' φ_j'`.
    fn weighted_lift(&self, k: &[f64], g: &[f64]) -> Vec<f64> {
        let m = g.len();
        let mut w = vec![0.0; m];
        if m < 3 {
            return w;
        }
        let s: Vec<f64> = (0..self.elements()).map(|e| k[e] / self.h(e)).collect();
        // Thomas sweep over interior nodes 1..m-1
        let n = m - 2;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for j in 0..n {
            let i = j + 1;
            let (cp, dp) = if j > 0 {
                (c[j - 1], d[j - 1])
            } else {
                (0.0, 0.0)
            };
            let lower = if j > 0 { -s[i - 1] } else { 0.0 };
            let denom = s[i - 1] + s[i] - lower * cp;
            c[j] = -s[i] / denom;
            d[j] = (g[i] - lower * dp) / denom;
        }
        w[n] = d[n - 1];
        for j in (0..n - 1).rev() {
            w[j + 1] = d[j] - c[j] * w[j + 2];
        }
        w
    }

    /// Relative `H¹₀` dual norm `sqrt(g·K⁻¹g) / q` of a quotient gradient.
    fn dual_norm(&self, g: &[f64], q: f64) -> f64 {
        let ones = vec![1.0; self.elements()];
        let w = self.weighted_lift(&ones, g);
        g.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().sqrt() / q
    }

    /// Element weights of the linearized p-energy at `u`, `p(p-1) a_e |d_e|^{p-2}`,
    /// with slopes clamped away from zero relative to the largest one: at
    /// rounding level for `p < 2`, at `1e-2` otherwise.
    fn energy_weights(&self, p: Exponent, u: &[f64]) -> Vec<f64> {
        let pv = p.value();
        let slopes: Vec<f64> = (0..self.elements())
            .map(|e| ((u[e + 1] - u[e]) / self.h(e)).abs())
            .collect();
        let rel = if pv < 2.0 { f64::EPSILON } else { 1e-2 };
        let floor = rel * slopes.iter().copied().fold(0.0, f64::max);
        slopes
            .iter()
            .zip(&self.a)
            .map(|(d, a)| pv * (pv - 1.0) * a * d.max(floor).powf(pv - 2.0))
            .collect()
    }
}

/// Discrete Rayleigh quotient with midpoint quadrature on each element.
pub fn rayleigh_quotient(mesh: &Mesh, p: Exponent, u: &[f64]) -> Result<f64> {
    if u.len() != mesh.nodes.len() {
        return Err(Error::Domain(format!(
            "expected {} nodal values, got {}",
            mesh.nodes.len(),
            u.len()
        )));
    }
    if u[0] != 0.0 || u[u.len() - 1] != 0.0 {
        return Err(Error::Domain(
            "nodal values must vanish at both ends".into(),
        ));
    }
    let (num, den) = mesh.energies(p, u);
    if !(den > 0.0) {
        return Err(Error::Degenerate("quotient denominator vanishes".into()));
    }
    Ok(num / den)
}

/// Gradient of [`rayleigh_quotient`] with respect to the nodal values.
pub fn rayleigh_gradient(mesh: &Mesh, p: Exponent, u: &[f64]) -> Result<Vec<f64>> {
    rayleigh_quotient(mesh, p, u)?;
    Ok(mesh.quotient_gradient(p, u).1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lambda1Fem {
    pub lambda1: f64,
    pub nodes: Vec<f64>,
    /// Minimizer, positive inside and normalized to unit weighted discrete norm.
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Relative `H¹₀` dual norm of the gradient at the returned iterate.
    pub gradient_norm: f64,
    /// Stopped above `tol` because no further decrease is resolvable in
    /// double precision.
    pub noise_limited: bool,
    /// Quotient after each accepted step, starting with the initializer.
    pub history: Vec<f64>,
}

const DESCENT_MAX_ITER: usize = 20_000;
const ARMIJO: f64 = 1e-4;
/// Changes of the quotient below this many ulps are unresolvable.
const RESOLVABLE_ULPS: f64 = 64.0;

/// Minimizes the discrete quotient over P1 functions by projected
/// preconditioned descent. The gradient is lifted through the stiffness
/// matrix of the linearized p-energy at the current iterate, a backtracking
/// line search enforces sufficient decrease, and the iterate is renormalized
/// after every step. Once the predicted decrease drops to rounding level a
/// step is accepted when the quotient does not increase and the gradient
/// shrinks; failing both tests, the trial with the largest resolvable
/// decrease is taken. Stops when the `H¹₀` dual norm of the gradient relative
/// to the quotient is `≤ tol`, or flags `noise_limited` when no trial step
/// lowers the quotient by a resolvable amount.
pub fn minimize_lambda1(prob: &Problem, n: usize, tol: f64) -> Result<Lambda1Fem> {
    minimize_lambda1_with(prob, n, tol, DESCENT_MAX_ITER)
}

/// [`minimize_lambda1`] with an explicit iteration cap.
pub fn minimize_lambda1_with(
    prob: &Problem,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Lambda1Fem> {
    if n < 16 {
        return Err(Error::Domain(format!(
            "mesh needs at least 16 elements, got {n}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let p = prob.p;
    let mesh = Mesh::new(prob, n)?;
    let trig = PTrig::shared(p);
    let w = trig.pi_p() / prob.length;
    let mut u: Vec<f64> = mesh.nodes.iter().map(|&x| trig.sin(w * x)).collect();
    let last = u.len() - 1;
    u[0] = 0.0;
    u[last] = 0.0;
    normalize(&mesh, p, &mut u);

    let (mut q, mut g) = mesh.quotient_gradient(p, &u);
    let mut r = mesh.dual_norm(&g, q);
    let mut history = vec![q];
    let mut step: f64 = 0.5;
    for iter in 0..max_iter {
        if r <= tol {
            return Ok(Lambda1Fem {
                lambda1: q,
                nodes: mesh.nodes,
                u,
                iterations: iter,
                gradient_norm: r,
                noise_limited: false,
                history,
            });
        }
        let dir = mesh.weighted_lift(&mesh.energy_weights(p, &u), &g);
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let resolution = RESOLVABLE_ULPS * f64::EPSILON * q;
        let mut t = (2.0 * step).min(1.0);
        let mut evaluated = false;
        let mut best: Option<(Vec<f64>, f64, Vec<f64>, f64)> = None;
        let accepted = loop {
            let mut trial: Vec<f64> = u.iter().zip(&dir).map(|(x, d)| x - t * d).collect();
            let (_, den) = mesh.energies(p, &trial);
            if den > 0.0 {
                evaluated = true;
                normalize(&mesh, p, &mut trial);
                let (qt, gt) = mesh.quotient_gradient(p, &trial);
                let predicted = ARMIJO * t * slope;
                let resolvable = predicted >= resolution;
                if resolvable && qt <= q - predicted {
                    break Some((trial, qt, gt, t));
                }
                if !resolvable && qt <= q {
                    let rt = mesh.dual_norm(&gt, qt);
                    if rt < 0.9 * r {
                        break Some((trial, qt, gt, t));
                    }
                }
                if qt < q - resolution && best.as_ref().is_none_or(|b| qt < b.1) {
                    best = Some((trial, qt, gt, t));
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                break best.take();
            }
        };
        let Some((next, qn, gn, t)) = accepted else {
            if !evaluated {
                return Err(Error::NonConvergence(format!(
                    "every trial step collapses to zero at relative gradient norm {r:e}"
                )));
            }
            // no step along the descent direction lowers the quotient by a resolvable amount
            return Ok(Lambda1Fem {
                lambda1: q,
                nodes: mesh.nodes,
                u,
                iterations: iter,
                gradient_norm: r,
                noise_limited: true,
                history,
            });
        };
        step = t;
        u = next;
        q = qn;
        g = gn;
        r = mesh.dual_norm(&g, q);
        history.push(q);
    }
    Err(Error::NonConvergence(format!(
        "quotient descent did not reach tolerance {tol:e} in {max_iter} iterations"
    )))
}

/// Scales to unit discrete `Σ ρ_e |Ū_e|^p h_e` with positive interior mass.
fn normalize(mesh: &Mesh, p: Exponent, u: &mut [f64]) {
    let (_, den) = mesh.energies(p, u);
    let sum: f64 = u.iter().sum();
    let s = den.powf(-1.0 / p.value()) * if sum < 0.0 { -1.0 } else { 1.0 };
    u.iter_mut().for_each(|x| *x *= s);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda2Equalized {
    pub lambda2: f64,
    /// Interior zero of the second eigenfunction.
    pub c_star: f64,
    pub iterations: usize,
}

/// `λ₂` as the common value `λ₁(0, c) = λ₁(c, ℓ)`: the second eigenfunction
/// has one interior zero and each of its restrictions is a first eigenfunction.
/// `c ↦ λ₁(0, c)` decreases and `c ↦ λ₁(c, ℓ)` increases, so `c` is found by
/// bisection inside `[δ, ℓ - δ]`, `δ` from the nodal-measure bound.
pub fn lambda2_equalize(prob: &Problem, tol: f64) -> Result<Lambda2Equalized> {
    lambda2_equalize_with(prob, tol, &SolveOptions::default())
}

pub fn lambda2_equalize_with(
    prob: &Problem,
    tol: f64,
    opts: &SolveOptions,
) -> Result<Lambda2Equalized> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let ell = prob.length;
    let sub_tol = (tol * 1e-2).max(1e-14);
    let sides = |c: f64| -> Result<(f64, f64)> {
        let left = prob.restrict(0.0, c)?;
        let right = prob.restrict(c, ell)?;
        let (l, r) = rayon::join(
            || solve_k_with(&left, 1, sub_tol, opts),
            || solve_k_with(&right, 1, sub_tol, opts),
        );
        Ok((l?.lambda, r?.lambda))
    };
    let delta = 0.99 * nodal_bound(prob, 2);
    let (mut lo, mut hi) = (delta, ell - delta);
    let (l_lo, r_lo) = sides(lo)?;
    let (l_hi, r_hi) = sides(hi)?;
    if !(l_lo >= r_lo && l_hi <= r_hi) {
        return Err(Error::Bracket(format!(
            "λ₁(0,c) - λ₁(c,ℓ) does not change sign on [{lo}, {hi}]"
        )));
    }
    let mut iterations = 0;
    loop {
        let c = 0.5 * (lo + hi);
        let (l, r) = sides(c)?;
        iterations += 1;
        let mean = 0.5 * (l + r);
        if (l - r).abs() <= tol * mean || hi - lo <= 4.0 * f64::EPSILON * ell {
            return Ok(Lambda2Equalized {
                lambda2: mean,
                c_star: c,
                iterations,
            });
        }
        if iterations >= 200 {
            return Err(Error::NonConvergence(
                "nodal equalization did not converge".into(),
            ));
        }
        if l > r {
            lo = c;
        } else {
            hi = c;
        }
    }
}

/// Lower bound `ℓ [(α/β)(ρ⁻/ρ⁺)]^{1/p} / k` on every nodal interval of the
/// k-th eigenfunction.
pub fn nodal_bound(prob: &Problem, k: usize) -> f64 {
    let ratio = (prob.a.lower() / prob.a.upper()) * (prob.rho.lower() / prob.rho.upper());
    prob.length * ratio.powf(1.0 / prob.p.value()) / k as f64
}

/// Relative slack applied when a bound is attained with equality.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylRow {
    pub k: usize,
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    /// `λ - lower`.
    pub margin_lower: f64,
    /// `upper - λ`.
    pub margin_upper: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylReport {
    pub rows: Vec<WeylRow>,
    pub all_ok: bool,
}

/// Checks `α/ρ⁺ μ_k ≤ λ_k ≤ β/ρ⁻ μ_k` for every eigenpair; violations are
/// reported, not raised.
pub fn check_weyl(prob: &Problem, eigs: &[Eigenpair]) -> WeylReport {
    let rows: Vec<WeylRow> = eigs
        .iter()
        .map(|ep| {
            let (lower, upper) = weyl_bounds(prob, ep.k);
            let margin_lower = ep.lambda - lower;
            let margin_upper = upper - ep.lambda;
            let ok = margin_lower >= -BOUND_SLACK * lower && margin_upper >= -BOUND_SLACK * upper;
            WeylRow {
                k: ep.k,
                lambda: ep.lambda,
                lower,
                upper,
                margin_lower,
                margin_upper,
                ok,
            }
        })
        .collect();
    let all_ok = rows.iter().all(|r| r.ok);
    WeylReport { rows, all_ok }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalReport {
    pub k: usize,
    pub lengths: Vec<f64>,
    pub bound: f64,
    pub min_length: f64,
    pub ok: bool,
}

/// Compares every nodal interval length with [`nodal_bound`]. A zero count
/// different from `k - 1` is itself reported as a failure.
pub fn check_nodal_measure(prob: &Problem, eig: &Eigenpair) -> NodalReport {
    let lengths = eig.nodal_lengths();
    let bound = nodal_bound(prob, eig.k);
    let min_length = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = lengths.len() == eig.k && min_length >= bound * (1.0 - BOUND_SLACK);
    NodalReport {
        k: eig.k,
        lengths,
        bound,
        min_length,
        ok,
    }
}
