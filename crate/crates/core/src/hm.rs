//! Hoelder-McCarthy type inequalities for quadratic forms `<M x, x>`.
//!
//! All two-sided chains here share one shape. Given "moment" functions
//! `P(p)` and `Q(p)` (for example `P(p) = <Phi(A^p) x, x>`), put
//!
//! ```text
//! d  = P(1) + Q(1) - 2 P(1/2) Q(1/2)
//! qa = P(1/2) Q(1/2) + P(1) - 2 P(3/4) Q(1/4)
//! qb = P(1/2) Q(1/2) + Q(1) - 2 P(1/4) Q(3/4)
//! middle = (1-t) P(1) + t Q(1) - P(1-t) Q(t)
//! ```
//!
//! and the chain is `r d + r0 qa <= middle <= R d - r0 qb` for `t <= 1/2`,
//! with `qa` and `qb` trading places for `t > 1/2`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matspd::{scalar_geq, Field, HpdMatrix, Mat, SlackReport, DEFAULT_TOL};
use crate::posmaps::PositiveMap;
use crate::scalar_young::{check_open_weight, check_weight, ppow, Branch, WeightConstants};

/// Tolerance used by [`hm_classic`].
pub const CLASSIC_TOL: f64 = 1e-11;

const UNIT_TOL: f64 = 1e-12;

/// A unit vector in `C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(DVector<Complex64>);

impl UnitVector {
    pub fn new(v: DVector<Complex64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::domain("empty vector"));
        }
        if (v.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::domain(format!("vector norm {} is not 1", v.norm())));
        }
        Ok(Self(v))
    }

    /// Scales a nonzero vector to unit length.
    pub fn normalize(v: DVector<Complex64>) -> Result<Self> {
        let n = v.norm();
        if n.is_nan() || n <= 0.0 || !n.is_finite() {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        Self::new(v.unscale(n))
    }

    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::domain(format!("basis index {i} out of range for dimension {n}")));
        }
        let mut v = DVector::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    /// `(1, ..., 1) / sqrt n`.
    pub fn flat(n: usize) -> Result<Self> {
        Self::normalize(DVector::from_element(n, Complex64::new(1.0, 0.0)))
    }

    /// Uniform on the unit sphere of `C^n` (or `R^n`).
    pub fn random(rng: &mut impl Rng, n: usize, field: Field) -> Self {
        loop {
            let v = DVector::from_fn(n, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = match field {
                    Field::Complex => rng.sample(StandardNormal),
                    Field::Real => 0.0,
                };
                Complex64::new(re, im)
            });
            if let Ok(u) = Self::normalize(v) {
                return u;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }
}

/// `Re <M x, x>`.
pub fn quadratic_form(m: &Mat, x: &UnitVector) -> Result<f64> {
    if m.nrows() != x.dim() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: x.dim() });
    }
    Ok(x.0.dotc(&(m * &x.0)).re)
}

/// Certifies `<T^t x, x> <= <T x, x>^t`.
pub fn hm_classic(t_mat: &HpdMatrix, x: &UnitVector, t: f64) -> Result<SlackReport> {
    check_weight(t)?;
    let m = quadratic_form(t_mat.as_mat(), x)?;
    let mt = quadratic_form(&t_mat.power_mat(t), x)?;
    let lhs = ppow(m, t);
    Ok(SlackReport::new(lhs - mt, lhs.abs() + mt.abs(), CLASSIC_TOL)
        .labeled("hm_classic", "<T^t x,x>", "<Tx,x>^t")
        .at(t, x.dim()))
}

/// A scalar chain with one report per side.
#[derive(Debug, Clone, PartialEq)]
pub struct HmChain {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    /// `middle >= lower`.
    pub lower_report: SlackReport,
    /// `upper >= middle`.
    pub upper_report: SlackReport,
}

impl HmChain {
    pub fn passed(&self) -> bool {
        self.lower_report.passed && self.upper_report.passed
    }

    fn scaled(self, factor: f64, reference: f64) -> Self {
        let (lower, middle, upper) = (self.lower * factor, self.middle * factor, self.upper * factor);
        let relabel = |r: &SlackReport, hi: f64, lo: f64| {
            scalar_geq(hi, lo, r.tol, reference).labeled(&r.inequality_id, &r.lhs_id, &r.rhs_id).at(r.t, r.dim)
        };
        Self {
            lower_report: relabel(&self.lower_report, middle, lower),
            upper_report: relabel(&self.upper_report, upper, middle),
            lower,
            middle,
            upper,
        }
    }
}

fn moment_chain(id: &str, t: f64, dim: usize, p: impl Fn(f64) -> f64, q: impl Fn(f64) -> f64) -> Result<HmChain> {
    check_open_weight(t)?;
    let w = WeightConstants::new(t)?;
    let (p1, q1) = (p(1.0), q(1.0));
    let cross = p(0.5) * q(0.5);
    let d = p1 + q1 - 2.0 * cross;
    let qa = cross + p1 - 2.0 * p(0.75) * q(0.25);
    let qb = cross + q1 - 2.0 * p(0.25) * q(0.75);
    let (lower_extra, upper_extra) = match Branch::for_weight(t) {
        Branch::Low => (qa, qb),
        Branch::High => (qb, qa),
    };
    let lower = w.r * d + w.r0 * lower_extra;
    let upper = w.big_r * d - w.r0 * upper_extra;
    let middle = (1.0 - t) * p1 + t * q1 - p(1.0 - t) * q(t);
    let reference = p1.abs() + q1.abs();
    Ok(HmChain {
        lower,
        middle,
        upper,
        lower_report: scalar_geq(middle, lower, DEFAULT_TOL, reference).labeled(id, "lower", "middle").at(t, dim),
        upper_report: scalar_geq(upper, middle, DEFAULT_TOL, reference).labeled(id, "middle", "upper").at(t, dim),
    })
}

fn require_unital(map: &PositiveMap) -> Result<()> {
    if !map.is_unital() {
        return Err(Error::domain(format!("{} map is not unital", map.kind())));
    }
    Ok(())
}

/// `p -> <Phi(A^p) x, x>` evaluated once per needed exponent.
fn map_moments(map: &PositiveMap, a: &HpdMatrix, x: &UnitVector, t: f64) -> Result<impl Fn(f64) -> f64> {
    if map.input_dim() != a.dim() || map.output_dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: map.output_dim(), got: x.dim() });
    }
    let exps = [1.0, 0.5, 0.25, 0.75, t, 1.0 - t];
    let mut table = Vec::with_capacity(exps.len());
    for p in exps {
        table.push((p, quadratic_form(&map.apply(&a.power_mat(p))?, x)?));
    }
    Ok(move |p: f64| table.iter().find(|(e, _)| *e == p).map(|(_, v)| *v).expect("exponent was tabulated"))
}

/// Two unital maps:
/// `middle = (1-t) <Phi(A)x,x> + t <Psi(B)x,x> - <Psi(B^t)x,x> <Phi(A^(1-t))x,x>`.
pub fn hm_two_map_chain(
    phi: &PositiveMap,
    psi: &PositiveMap,
    a: &HpdMatrix,
    b: &HpdMatrix,
    x: &UnitVector,
    t: f64,
) -> Result<HmChain> {
    require_unital(phi)?;
    require_unital(psi)?;
    check_open_weight(t)?;
    let p = map_moments(phi, a, x, t)?;
    let q = map_moments(psi, b, x, t)?;
    moment_chain("hm_two_map", t, x.dim(), p, q)
}

/// As [`hm_two_map_chain`] with `<Psi(B^p)x,x>` replaced by `<Psi(B)x,x>^p`.
pub fn hm_mixed_chain(
    phi: &PositiveMap,
    psi: &PositiveMap,
    a: &HpdMatrix,
    b: &HpdMatrix,
    x: &UnitVector,
    t: f64,
) -> Result<HmChain> {
    require_unital(phi)?;
    require_unital(psi)?;
    check_open_weight(t)?;
    let p = map_moments(phi, a, x, t)?;
    if psi.input_dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: psi.input_dim(), got: b.dim() });
    }
    let s = quadratic_form(&psi.apply(b.as_mat())?, x)?;
    moment_chain("hm_mixed", t, x.dim(), p, move |e| ppow(s, e))
}

/// One map and one operand. With `m = <Phi(A)x,x>`, `P(p) = <Phi(A^p)x,x>`
/// and `f = m^(t - 1/2)`, the chain reads
///
/// `f [2r (m^(1/2) - P(1/2)) + r0 lo] <= m^t - P(t) <= f [2R (m^(1/2) - P(1/2)) - r0 hi]`
///
/// where for `t <= 1/2`, `lo = P(1/2) + m^(1/2) - 2 P(1/4) m^(1/4)` and
/// `hi = P(1/2) + m^(1/2) - 2 P(3/4) m^(-1/4)`; for `t > 1/2` they swap.
pub fn hm_self_reverse(phi: &PositiveMap, a: &HpdMatrix, x: &UnitVector, t: f64) -> Result<HmChain> {
    require_unital(phi)?;
    check_open_weight(t)?;
    let w = WeightConstants::new(t)?;
    let p = map_moments(phi, a, x, t)?;
    let m = p(1.0);
    let f = ppow(m, t - 0.5);
    let root_gap = ppow(m, 0.5) - p(0.5);
    let quarter = p(0.5) + ppow(m, 0.5) - 2.0 * p(0.25) * ppow(m, 0.25);
    let three_quarter = p(0.5) + ppow(m, 0.5) - 2.0 * p(0.75) * ppow(m, -0.25);
    let (lo, hi) = match Branch::for_weight(t) {
        Branch::Low => (quarter, three_quarter),
        Branch::High => (three_quarter, quarter),
    };
    let lower = f * (2.0 * w.r * root_gap + w.r0 * lo);
    let upper = f * (2.0 * w.big_r * root_gap - w.r0 * hi);
    let middle = ppow(m, t) - p(t);
    let reference = m.abs() + ppow(m, t);
    let dim = x.dim();
    Ok(HmChain {
        lower,
        middle,
        upper,
        lower_report: scalar_geq(middle, lower, DEFAULT_TOL, reference).labeled("hm_self", "lower", "middle").at(t, dim),
        upper_report: scalar_geq(upper, middle, DEFAULT_TOL, reference).labeled("hm_self", "middle", "upper").at(t, dim),
    })
}

/// [`hm_self_reverse`] recovered from [`hm_mixed_chain`] with `Psi = Phi`,
/// `B = A` at weight `1 - t`, multiplied by `<Phi(A)x,x>^(t-1)`.
pub fn hm_self_via_mixed(phi: &PositiveMap, a: &HpdMatrix, x: &UnitVector, t: f64) -> Result<HmChain> {
    let chain = hm_mixed_chain(phi, phi, a, a, x, 1.0 - t)?;
    let m = quadratic_form(&phi.apply(a.as_mat())?, x)?;
    Ok(chain.scaled(ppow(m, t - 1.0), m.abs() + ppow(m, t)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmReverseSimple {
    pub middle: f64,
    pub bound_tight: f64,
    pub bound_loose: f64,
    /// `middle <= bound_tight`.
    pub tight_report: SlackReport,
    /// `bound_tight <= bound_loose`; meaningful only when `loose_applicable`.
    pub loose_report: SlackReport,
    /// `<Tx,x> >= 1`, the regime in which the loose bound follows.
    pub loose_applicable: bool,
}

/// For `0 < t <= 1/2`, with `m = <Tx,x>` and `P(p) = <T^p x,x>`:
///
/// `m^t - P(t) <= m^(t-1/2) [2R (m^(1/2) - P(1/2)) - r0 (P(1/2) + m^(1/2) - 2 P(3/4) m^(-1/4))]`
///
/// and the loose bound drops the prefactor `m^(t-1/2)`, which is at most one
/// exactly when `m >= 1`.
pub fn hm_reverse_simple(t_mat: &HpdMatrix, x: &UnitVector, t: f64) -> Result<HmReverseSimple> {
    if !(t > 0.0 && t <= 0.5) {
        return Err(Error::domain(format!("weight {t} outside (0, 1/2]")));
    }
    let w = WeightConstants::new(t)?;
    let moment = |p: f64| quadratic_form(&t_mat.power_mat(p), x);
    let m = moment(1.0)?;
    let (p_half, p_three, p_t) = (moment(0.5)?, moment(0.75)?, moment(t)?);
    let bracket = 2.0 * w.big_r * (ppow(m, 0.5) - p_half)
        - w.r0 * (p_half + ppow(m, 0.5) - 2.0 * p_three * ppow(m, -0.25));
    let bound_tight = ppow(m, t - 0.5) * bracket;
    let bound_loose = bracket;
    let middle = ppow(m, t) - p_t;
    let reference = m.abs() + ppow(m, t);
    let dim = x.dim();
    Ok(HmReverseSimple {
        middle,
        bound_tight,
        bound_loose,
        tight_report: scalar_geq(bound_tight, middle, DEFAULT_TOL, reference)
            .labeled("hm_simple", "middle", "bound_tight")
            .at(t, dim),
        loose_report: scalar_geq(bound_loose, bound_tight, DEFAULT_TOL, reference)
            .labeled("hm_simple", "bound_tight", "bound_loose")
            .at(t, dim),
        loose_applicable: m >= 1.0,
    })
}
