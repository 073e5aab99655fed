//! Generalized trigonometric functions `sin_p`, `asin_p` and the constant `π_p`.
//!
//! `sin_p` is the amplitude-one solution of `-(φ_p(u'))' = φ_p(u)`, defined on
//! `[0, π_p/2]` by
//!
//! ```text
//! x = ∫₀^{sin_p x} ((p-1)/(1-t^p))^{1/p} dt
//! ```
//!
//! and extended by `sin_p(π_p - x) = sin_p(x)`, oddness and `2π_p`-periodicity.
//! Along the curve `(p-1)|sin_p'|^p + |sin_p|^p = 1`.
//!
//! The defining integrand is singular at `t = 1`. Near the crest we change
//! variables to `z = (p-1)^{1/p'} |sin_p'|^{p-1}`, which turns the remaining
//! arc length into the *regular* integral `(p-1)^{1/p-1} ∫₀^z (1-w^{p'})^{-1/p'} dw`.
//! Each half of the quarter period is therefore a smooth integral over a
//! range where `w^q ≤ 1/2`, and no singular quadrature is ever needed.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

/// An exponent `p ∈ (1, ∞)` together with its conjugate `p' = p/(p-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Exponent {
    p: f64,
    conj: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Domain(format!(
                "exponent p must satisfy 1 < p < ∞, got {p}"
            )));
        }
        Ok(Exponent {
            p,
            conj: p / (p - 1.0),
        })
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.p
    }

    /// The conjugate exponent `p' = p/(p-1)`.
    #[inline]
    pub fn conj(self) -> f64 {
        self.conj
    }

    pub fn conjugate(self) -> Exponent {
        Exponent {
            p: self.conj,
            conj: self.p,
        }
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Exponent::new(p)
    }
}

impl From<Exponent> for f64 {
    fn from(e: Exponent) -> f64 {
        e.p
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

const TABLE_KNOTS: usize = 32;
const NEWTON_MAX_ITER: usize = 60;

/// `∫_lo^hi (1 - w^q)^{-1/q} dw` for `0 ≤ lo ≤ hi < 1`.
///
/// Integrated in `y = w^{1/m}` with `mq ≥ 8`, which pushes the non-analytic
/// `w^q` behaviour at the origin far enough into the Taylor tail that the
/// 15-point rule resolves it on a handful of panels.
fn unit_integral(q: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let m = (8.0 / q).ceil().max(1.0) as i32;
    let inv_m = 1.0 / m as f64;
    let inv_q = 1.0 / q;
    let (ylo, yhi) = (lo.powf(inv_m), hi.powf(inv_m));
    let integrand = |y: f64| {
        let ym1 = y.powi(m - 1);
        let w = ym1 * y;
        m as f64 * ym1 * (1.0 - w.powf(q)).powf(-inv_q)
    };
    quad::integrate(
        integrand,
        ylo,
        yhi,
        Tolerance {
            abs: 1e-17,
            rel: 1e-14,
            max_intervals: 400,
        },
    )
    .value
}

/// Monotone table of `(knot, cumulative integral)` pairs on one half of the
/// quarter period; used for warm starts and as a base point for short integrals.
#[derive(Debug, Clone)]
struct Table {
    q: f64,
    scale: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    fn build(q: f64, scale: f64, end: f64) -> Table {
        let knots: Vec<f64> = (0..=TABLE_KNOTS)
            .map(|i| end * i as f64 / TABLE_KNOTS as f64)
            .collect();
        let mut values = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        values.push(0.0);
        for w in knots.windows(2) {
            acc += scale * unit_integral(q, w[0], w[1]);
            values.push(acc);
        }
        Table {
            q,
            scale,
            knots,
            values,
        }
    }

    fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `scale · ∫₀^w (1-t^q)^{-1/q} dt` for `w` inside the table range.
    fn integral(&self, w: f64) -> f64 {
        let i = self
            .knots
            .partition_point(|&k| k <= w)
            .saturating_sub(1)
            .min(TABLE_KNOTS - 1);
        self.values[i] + self.scale * unit_integral(self.q, self.knots[i], w)
    }

    /// Inverts `integral(w) = target` by safeguarded Newton iteration.
    fn invert(&self, target: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        let i = self
            .values
            .partition_point(|&v| v <= target)
            .saturating_sub(1)
            .min(TABLE_KNOTS - 1);
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        let (x0, x1) = (self.values[i], self.values[i + 1]);
        if target >= x1 {
            return hi;
        }
        let base_knot = lo;
        let base = x0;
        let mut w = lo + (hi - lo) * (target - x0) / (x1 - x0);
        for _ in 0..NEWTON_MAX_ITER {
            let f = base + self.scale * unit_integral(self.q, base_knot, w) - target;
            if f == 0.0 {
                return w;
            }
            if f > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let df = self.scale * (1.0 - w.powf(self.q)).powf(-1.0 / self.q);
            let mut next = w - f / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - w).abs() <= 2.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
                return next;
            }
            w = next;
        }
        w
    }
}

/// Cached data for one exponent: `π_p`, the split point between the two
/// regular parametrizations, and the warm-start tables.
#[derive(Debug, Clone)]
pub struct PTrig {
    p: Exponent,
    pi_p: f64,
    half: f64,
    x_split: f64,
    inner: Table,
    outer: Table,
}

static CACHE: LazyLock<RwLock<HashMap<u64, Arc<PTrig>>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

impl PTrig {
    pub fn new(p: Exponent) -> PTrig {
        let pv = p.value();
        let q = p.conj();
        // inner: s ∈ [0, 2^{-1/p}],  x = (p-1)^{1/p} ∫₀^s (1-t^p)^{-1/p}
        let inner = Table::build(pv, (pv - 1.0).powf(1.0 / pv), 0.5f64.powf(1.0 / pv));
        // outer: z ∈ [0, 2^{-1/p'}], π_p/2 - x = (p-1)^{1/p-1} ∫₀^z (1-w^{p'})^{-1/p'}
        let outer = Table::build(q, (pv - 1.0).powf(1.0 / pv - 1.0), 0.5f64.powf(1.0 / q));
        let x_split = inner.end_value();
        let half = x_split + outer.end_value();
        PTrig {
            p,
            pi_p: 2.0 * half,
            half,
            x_split,
            inner,
            outer,
        }
    }

    /// Shared, lazily built instance for `p`.
    pub fn shared(p: Exponent) -> Arc<PTrig> {
        let key = p.value().to_bits();
        if let Some(t) = CACHE.read().unwrap().get(&key) {
            return Arc::clone(t);
        }
        let built = Arc::new(PTrig::new(p));
        let mut guard = CACHE.write().unwrap();
        Arc::clone(guard.entry(key).or_insert(built))
    }

    pub fn exponent(&self) -> Exponent {
        self.p
    }

    pub fn pi_p(&self) -> f64 {
        self.pi_p
    }

    fn s_from_z(&self, z: f64) -> f64 {
        (1.0 - z.powf(self.p.conj())).powf(1.0 / self.p.value())
    }

    fn c_from_z(&self, z: f64) -> f64 {
        let pv = self.p.value();
        (z * (pv - 1.0).powf(-1.0 / self.p.conj())).powf(1.0 / (pv - 1.0))
    }

    fn c_from_s(&self, s: f64) -> f64 {
        let pv = self.p.value();
        ((1.0 - s.powf(pv)) / (pv - 1.0)).powf(1.0 / pv)
    }

    /// `(sin_p r, sin_p' r)` for `r ∈ [0, π_p/2]`.
    fn first_quadrant(&self, r: f64) -> (f64, f64) {
        if r <= self.x_split {
            let s = self.inner.invert(r);
            (s, self.c_from_s(s))
        } else {
            let z = self.outer.invert((self.half - r).max(0.0));
            (self.s_from_z(z), self.c_from_z(z))
        }
    }

    /// `(sin_p x, sin_p' x)` for any real `x`.
    pub fn sin_cos(&self, x: f64) -> (f64, f64) {
        let period = 2.0 * self.pi_p;
        let r = x.rem_euclid(period);
        if r <= self.half {
            self.first_quadrant(r)
        } else if r <= self.pi_p {
            let (s, c) = self.first_quadrant(self.pi_p - r);
            (s, -c)
        } else if r <= self.pi_p + self.half {
            let (s, c) = self.first_quadrant(r - self.pi_p);
            (-s, -c)
        } else {
            let (s, c) = self.first_quadrant((period - r).max(0.0));
            (-s, c)
        }
    }

    pub fn sin(&self, x: f64) -> f64 {
        self.sin_cos(x).0
    }

    pub fn dsin(&self, x: f64) -> f64 {
        self.sin_cos(x).1
    }

    pub fn asin(&self, s: f64) -> Result<f64> {
        if !(s.abs() <= 1.0) {
            return Err(Error::Domain(format!(
                "asin_p argument must lie in [-1, 1], got {s}"
            )));
        }
        let a = s.abs();
        let pv = self.p.value();
        let ap = a.powf(pv);
        let x = if ap <= 0.5 {
            self.inner.integral(a)
        } else {
            let z = (1.0 - ap).powf(1.0 / self.p.conj());
            self.half - self.outer.integral(z)
        };
        Ok(x.copysign(s))
    }

    /// Amplitude and phase of the point `(u, w)`: returns `(A, θ)` with
    /// `θ ∈ [0, 2π_p)`, `u = A sin_p θ` and `w = A sin_p' θ`.
    pub fn polar(&self, u: f64, w: f64) -> (f64, f64) {
        let pv = self.p.value();
        let up = u.abs().powf(pv);
        let wp = (pv - 1.0) * w.abs().powf(pv);
        let amp = (up + wp).powf(1.0 / pv);
        if amp == 0.0 {
            return (0.0, 0.0);
        }
        let beta = if up <= wp {
            self.inner.integral(u.abs() / amp)
        } else {
            let c = w.abs() / amp;
            let z = (pv - 1.0).powf(1.0 / self.p.conj()) * c.powf(pv - 1.0);
            (self.half - self.outer.integral(z)).max(0.0)
        };
        let theta = match (u >= 0.0, w >= 0.0) {
            (true, true) => beta,
            (true, false) => self.pi_p - beta,
            (false, false) => self.pi_p + beta,
            (false, true) => 2.0 * self.pi_p - beta,
        };
        (amp, theta)
    }
}

/// Half-period constant `π_p = 2 ∫₀¹ ((p-1)/(1-t^p))^{1/p} dt`.
pub fn pi_p(p: Exponent) -> f64 {
    PTrig::shared(p).pi_p()
}

/// Inverse of `sin_p` on `[-π_p/2, π_p/2]`.
pub fn asin_p(p: Exponent, s: f64) -> Result<f64> {
    PTrig::shared(p).asin(s)
}

pub fn sin_p(p: Exponent, x: f64) -> f64 {
    PTrig::shared(p).sin(x)
}

/// Derivative of the amplitude-one `sin_p`.
pub fn dsin_p(p: Exponent, x: f64) -> f64 {
    PTrig::shared(p).dsin(x)
}
