//! Problem statement, coefficient descriptors and pointwise kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pfunc::{pi_p, Exponent};
use crate::quad::{self, Tolerance};

/// `φ_p(s) = |s|^{p-2} s`.
#[inline]
pub fn phi_p(p: Exponent, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    s.abs().powf(p.value() - 2.0) * s
}

/// Inverse of [`phi_p`], equal to `φ_{p'}`.
#[inline]
pub fn phi_p_inv(p: Exponent, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    t.abs().powf(p.conj() - 2.0) * t
}

/// Energy density `Φ(ξ) = a |ξ|^p`; its derivative in `ξ` is `p a φ_p(ξ)`.
#[inline]
pub fn big_phi(a_val: f64, p: Exponent, xi: f64) -> f64 {
    a_val * xi.abs().powf(p.value())
}

/// Both sides of the pointwise Picone identity for `Φ(ξ) = a|ξ|^p` and the
/// flux `a φ_p(ξ)`:
///
/// ```text
/// L = Φ(u') + (p-1)(u/v)^p Φ(v') - p (u/v)^{p-1} a φ_p(v') u'
/// R = a φ_p(u') u' - a φ_p(v') (u^p / v^{p-1})'
/// ```
///
/// `L ≥ 0`, and `L = 0` exactly when `(u, u')` is proportional to `(v, v')`.
pub fn picone_lr(p: Exponent, a_val: f64, u: f64, du: f64, v: f64, dv: f64) -> Result<(f64, f64)> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!(
            "Picone identity needs v > 0, got {v}"
        )));
    }
    if !(u >= 0.0) {
        return Err(Error::Domain(format!(
            "Picone identity needs u ≥ 0, got {u}"
        )));
    }
    if !(a_val > 0.0) {
        return Err(Error::Domain(format!(
            "coefficient must be positive, got {a_val}"
        )));
    }
    let pv = p.value();
    let ratio = u / v;
    let r_pm1 = ratio.powf(pv - 1.0);
    let r_p = r_pm1 * ratio;
    let flux_v = a_val * phi_p(p, dv);
    let l =
        big_phi(a_val, p, du) + (pv - 1.0) * r_p * big_phi(a_val, p, dv) - pv * r_pm1 * flux_v * du;
    // (u^p / v^{p-1})' = p (u/v)^{p-1} u' - (p-1) (u/v)^p v'
    let d_quot = pv * r_pm1 * du - (pv - 1.0) * r_p * dv;
    let r = a_val * phi_p(p, du) * du - flux_v * d_quot;
    Ok((l, r))
}

/// Shape of a coefficient profile inside its cell or domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    PiecewiseConstant,
    PiecewiseLinear,
}

/// A non-periodic profile: `breakpoints[0] < … < breakpoints[m]`.
///
/// Piecewise-constant profiles carry one value per piece (`m` values);
/// piecewise-linear profiles carry one value per breakpoint (`m + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    shape: Shape,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

/// Restriction of a coefficient to a subinterval containing no breakpoint:
/// `value(x) = v0 + slope (x - x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub v0: f64,
    pub slope: f64,
}

impl Segment {
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.v0 + self.slope * (x - self.x0)
    }

    #[inline]
    pub fn is_constant(&self) -> bool {
        self.slope == 0.0
    }
}

impl Profile {
    pub fn new(shape: Shape, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Profile> {
        if breakpoints.len() < 2 {
            return Err(Error::Domain(
                "a coefficient needs at least two breakpoints".into(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let expected = match shape {
            Shape::PiecewiseConstant => breakpoints.len() - 1,
            Shape::PiecewiseLinear => breakpoints.len(),
        };
        if values.len() != expected {
            return Err(Error::Domain(format!(
                "expected {expected} values for {} breakpoints, got {}",
                breakpoints.len(),
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::Domain(format!(
                "values[{i}] = {v} is not strictly positive"
            )));
        }
        Ok(Profile {
            shape,
            breakpoints,
            values,
        })
    }

    fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Index of the piece containing `x`, right-continuous at breakpoints.
    fn piece(&self, x: f64) -> usize {
        let last = self.breakpoints.len() - 2;
        self.breakpoints
            .partition_point(|&b| b <= x)
            .saturating_sub(1)
            .min(last)
    }

    fn segment_of(&self, j: usize) -> Segment {
        let x0 = self.breakpoints[j];
        match self.shape {
            Shape::PiecewiseConstant => Segment {
                x0,
                v0: self.values[j],
                slope: 0.0,
            },
            Shape::PiecewiseLinear => {
                let x1 = self.breakpoints[j + 1];
                Segment {
                    x0,
                    v0: self.values[j],
                    slope: (self.values[j + 1] - self.values[j]) / (x1 - x0),
                }
            }
        }
    }

    fn eval(&self, x: f64) -> f64 {
        self.segment_of(self.piece(x)).at(x)
    }

    fn restrict(&self, x0: f64, x1: f64) -> Profile {
        let mut bps = vec![x0];
        bps.extend(
            self.breakpoints
                .iter()
                .copied()
                .filter(|&b| b > x0 && b < x1),
        );
        bps.push(x1);
        let values = match self.shape {
            Shape::PiecewiseConstant => bps
                .windows(2)
                .map(|w| self.values[self.piece(0.5 * (w[0] + w[1]))])
                .collect(),
            Shape::PiecewiseLinear => bps.iter().map(|&b| self.eval(b)).collect(),
        };
        Profile {
            shape: self.shape,
            breakpoints: bps.iter().map(|b| b - x0).collect(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Profile(Profile),
    /// `c(x) = cell(frac(x / period))`, cell defined on `[0, 1]`.
    Periodic {
        cell: Profile,
        period: f64,
    },
}

/// A positive, bounded coefficient `a(x)` or weight `ρ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    repr: Repr,
}

impl Coefficient {
    pub fn constant(value: f64, length: f64) -> Result<Coefficient> {
        Coefficient::piecewise_constant(vec![0.0, length], vec![value])
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Coefficient> {
        Ok(Coefficient {
            repr: Repr::Profile(Profile::new(Shape::PiecewiseConstant, breakpoints, values)?),
        })
    }

    pub fn piecewise_linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Coefficient> {
        Ok(Coefficient {
            repr: Repr::Profile(Profile::new(Shape::PiecewiseLinear, breakpoints, values)?),
        })
    }

    /// Periodic extension of a unit-cell profile with period `period`.
    pub fn periodic(cell: Coefficient, period: f64) -> Result<Coefficient> {
        let cell = match cell.repr {
            Repr::Profile(p) => p,
            Repr::Periodic { .. } => {
                return Err(Error::Domain(
                    "a periodic cell cannot itself be periodic".into(),
                ))
            }
        };
        if cell.start() != 0.0 || cell.end() != 1.0 {
            return Err(Error::Domain(format!(
                "unit cell must span [0, 1], got [{}, {}]",
                cell.start(),
                cell.end()
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Domain(format!(
                "period must be positive, got {period}"
            )));
        }
        Ok(Coefficient {
            repr: Repr::Periodic { cell, period },
        })
    }

    /// Same coefficient with every value multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Coefficient> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Domain(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let scale = |p: &Profile| Profile {
            shape: p.shape,
            breakpoints: p.breakpoints.clone(),
            values: p.values.iter().map(|v| v * factor).collect(),
        };
        Ok(Coefficient {
            repr: match &self.repr {
                Repr::Profile(p) => Repr::Profile(scale(p)),
                Repr::Periodic { cell, period } => Repr::Periodic {
                    cell: scale(cell),
                    period: *period,
                },
            },
        })
    }

    pub fn shape(&self) -> Shape {
        match &self.repr {
            Repr::Profile(p) => p.shape,
            Repr::Periodic { cell, .. } => cell.shape,
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.shape() == Shape::PiecewiseConstant
    }

    pub fn period(&self) -> Option<f64> {
        match &self.repr {
            Repr::Profile(_) => None,
            Repr::Periodic { period, .. } => Some(*period),
        }
    }

    /// Breakpoints of the underlying profile (unit-cell breakpoints when periodic).
    pub fn breakpoints(&self) -> &[f64] {
        match &self.repr {
            Repr::Profile(p) => &p.breakpoints,
            Repr::Periodic { cell, .. } => &cell.breakpoints,
        }
    }

    pub fn values(&self) -> &[f64] {
        match &self.repr {
            Repr::Profile(p) => &p.values,
            Repr::Periodic { cell, .. } => &cell.values,
        }
    }

    /// Closed domain of definition; periodic coefficients cover the real line.
    pub fn domain(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Profile(p) => (p.start(), p.end()),
            Repr::Periodic { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Greatest lower bound of the values.
    pub fn lower(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn upper(&self) -> f64 {
        self.values()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain(format!(
                "x = {x} outside coefficient domain [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Value at `x`; right-continuous at breakpoints.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(match &self.repr {
            Repr::Profile(p) => p.eval(x),
            Repr::Periodic { cell, period } => cell.eval((x / period).rem_euclid(1.0)),
        })
    }

    /// All breakpoints in `(x0, x1)` plus the endpoints, ascending, with
    /// points closer than a relative `1e-12` to a neighbour merged.
    pub fn breakpoints_in(&self, x0: f64, x1: f64) -> Vec<f64> {
        let mut pts = vec![x0];
        match &self.repr {
            Repr::Profile(p) => {
                pts.extend(p.breakpoints.iter().copied().filter(|&b| b > x0 && b < x1))
            }
            Repr::Periodic { cell, period } => {
                let first = (x0 / period).floor() as i64;
                let last = (x1 / period).ceil() as i64;
                for j in first..=last {
                    for &b in &cell.breakpoints[..cell.breakpoints.len() - 1] {
                        let x = (j as f64 + b) * period;
                        if x > x0 && x < x1 {
                            pts.push(x);
                        }
                    }
                }
            }
        }
        pts.push(x1);
        merge_close(pts, x1 - x0)
    }

    /// The linear piece describing the coefficient on `[x0, x1]`, which must
    /// not straddle a breakpoint. The piece is selected at the midpoint.
    pub fn segment(&self, x0: f64, x1: f64) -> Segment {
        let mid = 0.5 * (x0 + x1);
        match &self.repr {
            Repr::Profile(p) => p.segment_of(p.piece(mid)),
            Repr::Periodic { cell, period } => {
                let cell_index = (mid / period).floor();
                let local = cell.segment_of(cell.piece(mid / period - cell_index));
                Segment {
                    x0: (cell_index + local.x0) * period,
                    v0: local.v0,
                    slope: local.slope / period,
                }
            }
        }
    }

    /// Non-periodic copy of the coefficient on `[x0, x1]`, shifted to start at 0.
    pub fn restrict(&self, x0: f64, x1: f64) -> Result<Coefficient> {
        self.check_domain(x0)?;
        self.check_domain(x1)?;
        if !(x0 < x1) {
            return Err(Error::Domain(format!("empty restriction [{x0}, {x1}]")));
        }
        let profile = match &self.repr {
            Repr::Profile(p) => p.restrict(x0, x1),
            Repr::Periodic { cell, .. } => {
                let bps = self.breakpoints_in(x0, x1);
                let values = match cell.shape {
                    Shape::PiecewiseConstant => bps
                        .windows(2)
                        .map(|w| self.segment(w[0], w[1]).v0)
                        .collect(),
                    Shape::PiecewiseLinear => bps
                        .iter()
                        .map(|&b| self.eval(b).expect("inside domain"))
                        .collect(),
                };
                Profile {
                    shape: cell.shape,
                    breakpoints: bps.iter().map(|b| b - x0).collect(),
                    values,
                }
            }
        };
        Ok(Coefficient {
            repr: Repr::Profile(profile),
        })
    }

    /// `∫_{x0}^{x1} g(c(x)) dx`, exact piece by piece for piecewise-constant
    /// coefficients and by adaptive quadrature on each linear piece otherwise.
    pub fn integrate_map<G: Fn(f64) -> f64>(&self, x0: f64, x1: f64, g: G) -> f64 {
        let bps = self.breakpoints_in(x0, x1);
        bps.windows(2)
            .map(|w| {
                let seg = self.segment(w[0], w[1]);
                if seg.is_constant() {
                    g(seg.v0) * (w[1] - w[0])
                } else {
                    quad::integrate(|x| g(seg.at(x)), w[0], w[1], Tolerance::default()).value
                }
            })
            .sum()
    }
}

/// Sorts and removes points within `1e-12 * scale` of their predecessor,
/// always keeping the first and last entries.
pub(crate) fn merge_close(mut pts: Vec<f64>, scale: f64) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    let tol = 1e-12 * scale.abs().max(f64::MIN_POSITIVE);
    let last = *pts.last().unwrap();
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for x in pts {
        match out.last() {
            Some(&prev) if x - prev <= tol => {}
            _ => out.push(x),
        }
    }
    if *out.last().unwrap() != last {
        let n = out.len();
        if n > 1 && last - out[n - 1] <= tol {
            out[n - 1] = last;
        } else {
            out.push(last);
        }
    }
    out
}

/// `-(a(x)|u'|^{p-2}u')' = λ ρ(x) |u|^{p-2} u` on `(0, length)` with Dirichlet ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub length: f64,
    pub p: Exponent,
    pub a: Coefficient,
    pub rho: Coefficient,
}

impl Problem {
    pub fn new(length: f64, p: Exponent, a: Coefficient, rho: Coefficient) -> Result<Problem> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Domain(format!(
                "length must be positive, got {length}"
            )));
        }
        for (name, c) in [("a", &a), ("rho", &rho)] {
            let (lo, hi) = c.domain();
            if lo > 0.0 || hi < length {
                return Err(Error::Domain(format!(
                    "coefficient {name} is defined on [{lo}, {hi}], which does not cover [0, {length}]"
                )));
            }
        }
        Ok(Problem { length, p, a, rho })
    }

    /// Constant-coefficient problem `a ≡ a_val`, `ρ ≡ rho_val`.
    pub fn constant(length: f64, p: Exponent, a_val: f64, rho_val: f64) -> Result<Problem> {
        Problem::new(
            length,
            p,
            Coefficient::constant(a_val, length)?,
            Coefficient::constant(rho_val, length)?,
        )
    }

    /// Union of the breakpoints of `a` and `ρ` inside `[0, length]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = self.a.breakpoints_in(0.0, self.length);
        pts.extend(self.rho.breakpoints_in(0.0, self.length));
        merge_close(pts, self.length)
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.a.is_piecewise_constant() && self.rho.is_piecewise_constant()
    }

    /// `μ_k = (π_p k / ℓ)^p`, the k-th eigenvalue with `a ≡ ρ ≡ 1`.
    pub fn mu(&self, k: usize) -> f64 {
        (pi_p(self.p) * k as f64 / self.length).powf(self.p.value())
    }

    /// Problem on the subinterval `[x0, x1]`, shifted to `(0, x1 - x0)`.
    pub fn restrict(&self, x0: f64, x1: f64) -> Result<Problem> {
        Problem::new(
            x1 - x0,
            self.p,
            self.a.restrict(x0, x1)?,
            self.rho.restrict(x0, x1)?,
        )
    }

    pub fn with_rho(&self, rho: Coefficient) -> Result<Problem> {
        Problem::new(self.length, self.p, self.a.clone(), rho)
    }
}

/// The k-th eigenvalue together with a sampled, `L^p`-normalized eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenpair {
    pub k: usize,
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    /// Interior zeros in ascending order.
    pub zeros: Vec<f64>,
}

impl Eigenpair {
    /// Lengths of the nodal intervals delimited by `0`, the zeros and `ℓ`.
    pub fn nodal_lengths(&self) -> Vec<f64> {
        let end = *self.grid.last().unwrap_or(&0.0);
        let mut cuts = vec![self.grid.first().copied().unwrap_or(0.0)];
        cuts.extend(self.zeros.iter().copied());
        cuts.push(end);
        cuts.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Composite-trapezoid `∫ |u|^p` over a sampled grid.
pub fn lp_norm_p(grid: &[f64], u: &[f64], p: Exponent) -> f64 {
    grid.windows(2)
        .zip(u.windows(2))
        .map(|(x, v)| {
            0.5 * (x[1] - x[0]) * (v[0].abs().powf(p.value()) + v[1].abs().powf(p.value()))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn two_phase() -> Coefficient {
        Coefficient::piecewise_constant(vec![0.0, 0.5, 1.0], vec![1.0, 4.0]).unwrap()
    }

    #[test]
    fn phi_p_examples() {
        for s in [-3.0, 0.0, 7.0] {
            assert_eq!(phi_p(e(2.0), s), s);
            assert_eq!(phi_p_inv(e(2.0), s), s);
        }
        assert_eq!(phi_p(e(3.0), -2.0), -4.0);
        assert_eq!(phi_p_inv(e(3.0), -4.0), -2.0);
        assert!((phi_p(e(1.5), 4.0) - 2.0).abs() < 1e-15);
        for p in [1.3, 2.6] {
            assert!((phi_p_inv(e(p), phi_p(e(p), 0.37)) - 0.37).abs() < 1e-13);
        }
        assert_eq!(phi_p(e(1.5), 0.0), 0.0);
    }

    #[test]
    fn big_phi_examples_and_derivative() {
        assert_eq!(big_phi(1.0, e(2.0), -3.0), 9.0);
        assert!((big_phi(2.0, e(3.0), 0.5) - 0.25).abs() < 1e-15);
        let h = 1e-4;
        for (a, p, xi) in [(1.5, 2.5, 0.7), (0.3, 1.4, -1.2), (3.0, 4.0, 2.0)] {
            let fd = (big_phi(a, e(p), xi + h) - big_phi(a, e(p), xi - h)) / (2.0 * h);
            let exact = p * a * phi_p(e(p), xi);
            assert!(
                (fd - exact).abs() < 1e-6 * (1.0 + exact.abs()),
                "{fd} vs {exact}"
            );
        }
    }

    #[test]
    fn picone_examples() {
        let (l, r) = picone_lr(e(2.0), 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!((l, r), (1.0, 1.0));
        for p in [1.3, 2.0, 3.7] {
            let (l, r) = picone_lr(e(p), 2.0, 0.8, -0.4, 0.8, -0.4).unwrap();
            assert!(l.abs() < 1e-14 && r.abs() < 1e-14, "p={p}: {l} {r}");
        }
        assert!(matches!(
            picone_lr(e(2.0), 1.0, 1.0, 0.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            picone_lr(e(2.0), 1.0, -1.0, 0.0, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn eval_coeff_examples() {
        let c = two_phase();
        assert_eq!(c.eval(0.25).unwrap(), 1.0);
        assert_eq!(c.eval(0.5).unwrap(), 4.0);
        assert_eq!(c.eval(1.0).unwrap(), 4.0);
        assert!(matches!(c.eval(1.5), Err(Error::Domain(_))));
        let per = Coefficient::periodic(c, 0.1).unwrap();
        assert_eq!(per.eval(0.77).unwrap(), 4.0);
        assert_eq!(per.eval(0.72).unwrap(), 1.0);
        let lin = Coefficient::piecewise_linear(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert!((lin.eval(0.25).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn coefficient_validation() {
        assert!(Coefficient::piecewise_constant(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(Coefficient::piecewise_constant(vec![0.0, 1.0], vec![-2.0]).is_err());
        assert!(Coefficient::piecewise_constant(vec![0.0, 0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Coefficient::piecewise_constant(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(Coefficient::piecewise_linear(vec![0.0, 1.0], vec![1.0]).is_err());
        let off_cell = Coefficient::piecewise_constant(vec![0.0, 2.0], vec![1.0]).unwrap();
        assert!(Coefficient::periodic(off_cell, 0.5).is_err());
        let short = Coefficient::constant(1.0, 0.5).unwrap();
        assert!(Problem::new(1.0, e(2.0), short.clone(), short).is_err());
    }

    #[test]
    fn periodic_breakpoints_and_segments() {
        let per = Coefficient::periodic(two_phase(), 0.25).unwrap();
        let bps = per.breakpoints_in(0.0, 1.0);
        assert_eq!(bps.len(), 9);
        for (i, b) in bps.iter().enumerate() {
            assert!((b - 0.125 * i as f64).abs() < 1e-15);
        }
        let seg = per.segment(0.625, 0.75);
        assert_eq!(seg.v0, 4.0);
        assert!(seg.is_constant());
        let r = per.restrict(0.3, 0.9).unwrap();
        assert!((r.domain().1 - 0.6).abs() < 1e-15);
        assert_eq!(r.eval(0.0).unwrap(), 1.0);
        assert_eq!(r.eval(0.1).unwrap(), 4.0);
    }

    #[test]
    fn bounds_and_integrals() {
        let c = two_phase();
        assert_eq!((c.lower(), c.upper()), (1.0, 4.0));
        let inv_mean = c.integrate_map(0.0, 1.0, |a| 1.0 / a);
        assert!((inv_mean - 0.625).abs() < 1e-15);
        let lin = Coefficient::piecewise_linear(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert!((lin.integrate_map(0.0, 1.0, |v| v) - 2.0).abs() < 1e-14);
        assert!((lin.integrate_map(0.0, 1.0, |v| 1.0 / v) - 3f64.ln() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn merge_close_keeps_endpoints() {
        let m = merge_close(vec![0.0, 1.0, 0.5, 1.0 - 1e-15, 0.5], 1.0);
        assert_eq!(m, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn trapezoid_norm() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let u: Vec<f64> = grid
            .iter()
            .map(|x| (std::f64::consts::PI * x).sin())
            .collect();
        // ∫₀¹ sin² πx = 1/2
        assert!((lp_norm_p(&grid, &u, e(2.0)) - 0.5).abs() < 1e-12);
    }
}
