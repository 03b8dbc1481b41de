//! Operator Young refinements and reverses.
//!
//! Every bound is assembled from one [`MeanPencil`] so the eigendecomposition
//! of `A^(-1/2) B A^(-1/2)` is shared by all weighted means in a sum. The
//! dyadic refinement terms are second differences
//! `A #_p B + A #_(p+2h) B - 2 A #_(p+h) B`, positive semidefinite whenever
//! the coefficient in front is nonnegative.

use crate::error::Result;
use crate::matspd::{loewner_geq_scaled, HpdMatrix, Mat, MeanPencil, SlackReport, DEFAULT_TOL};
use crate::scalar_young::{check_open_weight, check_weight, Branch, RefinementSchedule, WeightConstants};

/// `lower <= middle <= upper` in the Loewner order, with one report per link.
#[derive(Debug, Clone)]
pub struct OperatorChain {
    pub lower: Mat,
    pub middle: Mat,
    pub upper: Mat,
    pub lower_report: SlackReport,
    pub upper_report: SlackReport,
}

/// A refinement term `D` certifying `A #_t B + D <= A nabla_t B`.
#[derive(Debug, Clone)]
pub struct LowerRefinement {
    pub refinement: Mat,
    /// `A #_t B + refinement`.
    pub bound: Mat,
    pub report: SlackReport,
}

/// An upper bound `U` certifying `A nabla_t B <= U`.
#[derive(Debug, Clone)]
pub struct UpperBound {
    pub bound: Mat,
    pub report: SlackReport,
}

fn reference(p: &MeanPencil) -> f64 {
    crate::matspd::spectral_norm(p.a()) + crate::matspd::spectral_norm(p.b())
}

/// `A nabla B - A # B = (A + B - 2 A # B) / 2`.
pub(crate) fn am_gm_gap(p: &MeanPencil) -> Mat {
    p.second_difference(0.0, 0.5).scale(0.5)
}

/// `sum_j s_j(t) (A #_(alpha_j) B + A #_(alpha_j + 2^(1-j)) B - 2 A #_(alpha_j + 2^-j) B)`.
pub fn sababheh_lower_term(p: &MeanPencil, t: f64, n: usize) -> Result<Mat> {
    let schedule = RefinementSchedule::new(t, n)?;
    let mut acc = Mat::zeros(p.dim(), p.dim());
    for e in schedule.iter().filter(|e| e.s != 0.0) {
        acc += p.second_difference(e.alpha, 0.5f64.powi(e.j as i32)).scale(e.s);
    }
    Ok(acc)
}

/// The `N`-term series subtracted in the reverse bound.
///
/// Low branch (`t <= 1/2`), with `beta_j = 2^-j k_j(2t)`:
/// `sum_j s_j(2t) (A #_(1-beta_j) B + A #_(1-beta_j-2^-j) B - 2 A #_(1-beta_j-2^(-j-1)) B)`.
///
/// High branch (`t >= 1/2`), with `g_j = 2^-j k_j(2-2t)`:
/// `sum_j s_j(2-2t) (A #_(g_j) B + A #_(g_j+2^-j) B - 2 A #_(g_j+2^(-j-1)) B)`.
///
/// Both reduce on commuting inputs to the scalar tail `S_N(2t; sqrt(ab), b)`
/// resp. `S_N(2-2t; sqrt(ab), a)`.
pub fn sababheh_upper_correction(p: &MeanPencil, t: f64, n: usize, branch: Branch) -> Result<Mat> {
    check_branch(t, branch)?;
    let schedule = RefinementSchedule::new(t, n)?;
    let coeffs = match branch {
        Branch::Low => RefinementSchedule::new(2.0 * t, n)?,
        Branch::High => RefinementSchedule::new(2.0 - 2.0 * t, n)?,
    };
    let mut acc = Mat::zeros(p.dim(), p.dim());
    for (e, c) in schedule.iter().zip(coeffs.iter()).filter(|(_, c)| c.s != 0.0) {
        let h = 0.5f64.powi(e.j as i32 + 1);
        let start = match branch {
            Branch::Low => 1.0 - e.beta - 2.0 * h,
            Branch::High => 0.5 * e.gamma,
        };
        acc += p.second_difference(start, h).scale(c.s);
    }
    Ok(acc)
}

pub(crate) fn check_branch(t: f64, branch: Branch) -> Result<()> {
    check_weight(t)?;
    match branch {
        Branch::Low if t > 0.5 => Err(crate::Error::domain(format!("low branch needs t <= 1/2, got {t}"))),
        Branch::High if t < 0.5 => Err(crate::Error::domain(format!("high branch needs t >= 1/2, got {t}"))),
        _ => Ok(()),
    }
}

/// `A #_t B + r (A + B - 2 A # B) <= A nabla_t B <= A #_t B + R (A + B - 2 A # B)`.
pub fn kittaneh_chain(a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<OperatorChain> {
    let p = MeanPencil::new(a, b)?;
    kittaneh_chain_pencil(&p, t)
}

pub fn kittaneh_chain_pencil(p: &MeanPencil, t: f64) -> Result<OperatorChain> {
    let w = WeightConstants::new(t)?;
    let g = p.geometric(t);
    let spread = p.second_difference(0.0, 0.5);
    let lower = &g + spread.scale(w.r);
    let upper = &g + spread.scale(w.big_r);
    let middle = p.arithmetic(t);
    let rf = reference(p);
    let lower_report = loewner_geq_scaled(&middle, &lower, DEFAULT_TOL, rf)?
        .labeled("kitt", "geo_t+r*spread", "arith_t")
        .at(t, p.dim());
    let upper_report = loewner_geq_scaled(&upper, &middle, DEFAULT_TOL, rf)?
        .labeled("kitt", "arith_t", "geo_t+R*spread")
        .at(t, p.dim());
    Ok(OperatorChain { lower, middle, upper, lower_report, upper_report })
}

/// Departure of the raw product `A^(1-t) B^t` from Hermiticity, relative to
/// its norm. The product is only order-comparable when `A` and `B` commute,
/// which is why every chain here uses `A #_t B` instead.
pub fn kittaneh_raw_product_defect(a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<f64> {
    check_weight(t)?;
    let prod = a.power_mat(1.0 - t) * b.power_mat(t);
    let norm = prod.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    Ok(crate::matspd::hermitian_defect(&prod) / norm)
}

pub fn sababheh_lower(a: &HpdMatrix, b: &HpdMatrix, t: f64, n: usize) -> Result<LowerRefinement> {
    let p = MeanPencil::new(a, b)?;
    sababheh_lower_pencil(&p, t, n)
}

pub fn sababheh_lower_pencil(p: &MeanPencil, t: f64, n: usize) -> Result<LowerRefinement> {
    let refinement = sababheh_lower_term(p, t, n)?;
    let bound = &refinement + p.geometric(t);
    let report = loewner_geq_scaled(&p.arithmetic(t), &bound, DEFAULT_TOL, reference(p))?
        .labeled("sab_lower", "geo_t+S_N", "arith_t")
        .at(t, p.dim());
    Ok(LowerRefinement { refinement, bound, report })
}

/// `N = 2` closed form of the lower refinement.
///
/// `t <= 1/2`: `r0 (A # B - 2 A #_(1/4) B + A) + 2t (A nabla B - A # B)`;
/// `t > 1/2`: `r0 (A # B - 2 A #_(3/4) B + B) + 2(1-t) (A nabla B - A # B)`.
pub fn zhao_lower_n2(a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<LowerRefinement> {
    let p = MeanPencil::new(a, b)?;
    zhao_lower_n2_pencil(&p, t)
}

pub fn zhao_lower_n2_pencil(p: &MeanPencil, t: f64) -> Result<LowerRefinement> {
    check_open_weight(t)?;
    let w = WeightConstants::new(t)?;
    let correction = match Branch::for_weight(t) {
        Branch::Low => p.second_difference(0.0, 0.25),
        Branch::High => p.second_difference(0.5, 0.25),
    };
    let refinement = correction.scale(w.r0) + am_gm_gap(p).scale(2.0 * w.r);
    let bound = &refinement + p.geometric(t);
    let report = loewner_geq_scaled(&p.arithmetic(t), &bound, DEFAULT_TOL, reference(p))?
        .labeled("zhao_lower", "geo_t+refinement", "arith_t")
        .at(t, p.dim());
    Ok(LowerRefinement { refinement, bound, report })
}

/// `A nabla_t B <= A #_t B + 2R (A nabla B - A # B) - correction`, with the
/// series of [`sababheh_upper_correction`].
pub fn sababheh_upper(a: &HpdMatrix, b: &HpdMatrix, t: f64, n: usize) -> Result<UpperBound> {
    let p = MeanPencil::new(a, b)?;
    sababheh_upper_pencil(&p, t, n, Branch::for_weight(t))
}

pub fn sababheh_upper_pencil(p: &MeanPencil, t: f64, n: usize, branch: Branch) -> Result<UpperBound> {
    // 2(1-t) on the low branch, 2t on the high branch
    let head = match branch {
        Branch::Low => 2.0 * (1.0 - t),
        Branch::High => 2.0 * t,
    };
    let correction = sababheh_upper_correction(p, t, n, branch)?;
    let bound = p.geometric(t) + am_gm_gap(p).scale(head) - correction;
    let report = loewner_geq_scaled(&bound, &p.arithmetic(t), DEFAULT_TOL, reference(p))?
        .labeled("sab_upper", "arith_t", "geo_t+2R*gap-S_N")
        .at(t, p.dim());
    Ok(UpperBound { bound, report })
}

/// `N = 2` closed form of the reverse.
///
/// `t <= 1/2`: `A #_t B + 2(1-t)(A nabla B - A # B) - r0 (A # B - 2 A #_(3/4) B + B)`;
/// `t > 1/2`: `A #_t B + 2t (A nabla B - A # B) - r0 (A # B - 2 A #_(1/4) B + A)`.
pub fn zhao_upper_n2(a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<UpperBound> {
    let p = MeanPencil::new(a, b)?;
    zhao_upper_n2_pencil(&p, t)
}

pub fn zhao_upper_n2_pencil(p: &MeanPencil, t: f64) -> Result<UpperBound> {
    check_open_weight(t)?;
    let w = WeightConstants::new(t)?;
    let correction = match Branch::for_weight(t) {
        Branch::Low => p.second_difference(0.5, 0.25),
        Branch::High => p.second_difference(0.0, 0.25),
    };
    let bound = p.geometric(t) + am_gm_gap(p).scale(2.0 * w.big_r) - correction.scale(w.r0);
    let report = loewner_geq_scaled(&bound, &p.arithmetic(t), DEFAULT_TOL, reference(p))?
        .labeled("zhao_upper", "arith_t", "geo_t+2R*gap-r0*corr")
        .at(t, p.dim());
    Ok(UpperBound { bound, report })
}
