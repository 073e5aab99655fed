//! Spectral computations for the one-dimensional weighted p-Laplacian
//!
//! ```text
//! -(a(x)|u'|^{p-2}u')' = λ ρ(x) |u|^{p-2} u   on (0, ℓ),   u(0) = u(ℓ) = 0.
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod homog;
pub mod pfunc;
pub mod problem;
pub mod quad;
pub mod rayleigh;
pub mod shoot;

pub use error::{Error, Result};
pub use homog::{
    convergence_report, effective_coefficient, effective_weight, homogenized_eigenvalue,
    sweep_epsilon, CellProblem, SweepResult,
};
pub use pfunc::{asin_p, dsin_p, pi_p, sin_p, Exponent, PTrig};
pub use problem::{big_phi, phi_p, phi_p_inv, picone_lr, Coefficient, Eigenpair, Problem, Shape};
pub use rayleigh::{
    check_nodal_measure, check_weyl, lambda2_equalize, minimize_lambda1, rayleigh_quotient, Mesh,
};
pub use shoot::{
    bracket_k, count_interior_zeros, exact_propagate_pc, integrate_ivp, solve_k, solve_k_with,
    Method, Rk4Options, SolveOptions, Trajectory,
};
