//! Alternative readings of several bounds that turn out to be false, kept so
//! that the failures stay reproducible. Each has a seeded counterexample
//! search; the tests pin one counterexample per form and check that the
//! forms used elsewhere in the crate hold on the same instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hm::{hm_reverse_simple, hm_two_map_chain, quadratic_form, UnitVector};
use crate::matspd::{lambda_min, random_hpd_with, Field, HpdMatrix, Mat, MeanPencil};
use crate::posmaps::PositiveMap;
use crate::refinements::{am_gm_gap, sababheh_upper_correction};
use crate::scalar_young::{ppow, zhao_bounds, Branch, Chain, RefinementSchedule, WeightConstants};

/// Which alternative form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Two-term scalar bound for `t > 1/2` with `r` and `R` exchanged.
    ZhaoSwappedWeights,
    /// Reverse series with the outer exponent `1 - beta_j + 2^-j`
    /// (low branch) and spacing `2^-j` from `2^(1-j) k_j` (high branch).
    UpperSeriesShifted,
    /// Single-operand reverse with the `P(1/4) m^(1/4)` correction.
    SimpleReverseQuarter,
    /// Two-map chain for `t > 1/2` with `r`, `R` exchanged and the `r0`
    /// corrections left in their `t <= 1/2` positions.
    TwoMapHighUnswapped,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ZhaoSwappedWeights,
        Variant::UpperSeriesShifted,
        Variant::SimpleReverseQuarter,
        Variant::TwoMapHighUnswapped,
    ];
}

pub fn zhao_swapped_weights(t: f64, a: f64, b: f64) -> Result<Chain> {
    let w = WeightConstants::new(t)?;
    let mut chain = zhao_bounds(t, a, b)?;
    if Branch::for_weight(t) == Branch::High {
        let root_gap = (a.sqrt() - b.sqrt()).powi(2);
        let q = (a * b).sqrt().sqrt();
        chain.lower = w.big_r * root_gap + w.r0 * (q - b.sqrt()).powi(2);
        chain.upper = w.r * root_gap - w.r0 * (q - a.sqrt()).powi(2);
    }
    Ok(chain)
}

/// Reverse bound `head - series` using the shifted series.
pub fn upper_series_shifted(p: &MeanPencil, t: f64, n: usize) -> Result<Mat> {
    let branch = Branch::for_weight(t);
    let schedule = RefinementSchedule::new(t, n)?;
    let coeffs = match branch {
        Branch::Low => RefinementSchedule::new(2.0 * t, n)?,
        Branch::High => RefinementSchedule::new(2.0 - 2.0 * t, n)?,
    };
    let mut series = Mat::zeros(p.dim(), p.dim());
    for (e, c) in schedule.iter().zip(coeffs.iter()) {
        let d = 0.5f64.powi(e.j as i32);
        let term = match branch {
            Branch::Low => {
                p.geometric(1.0 - e.beta) + p.geometric(1.0 + d - e.beta) - p.geometric(1.0 - d / 2.0 - e.beta).scale(2.0)
            }
            Branch::High => p.second_difference(e.gamma, d),
        };
        series += term.scale(c.s);
    }
    let head_weight = match branch {
        Branch::Low => 2.0 * (1.0 - t),
        Branch::High => 2.0 * t,
    };
    Ok(p.geometric(t) + am_gm_gap(p).scale(head_weight) - series)
}

/// The corrected reverse bound, for comparison with [`upper_series_shifted`].
fn upper_series_corrected(p: &MeanPencil, t: f64, n: usize) -> Result<Mat> {
    let branch = Branch::for_weight(t);
    let head_weight = match branch {
        Branch::Low => 2.0 * (1.0 - t),
        Branch::High => 2.0 * t,
    };
    Ok(p.geometric(t) + am_gm_gap(p).scale(head_weight) - sababheh_upper_correction(p, t, n, branch)?)
}

/// `(middle, tight)` of the single-operand reverse with the quarter-power
/// correction, `0 < t <= 1/2`.
pub fn simple_reverse_quarter(t_mat: &HpdMatrix, x: &UnitVector, t: f64) -> Result<(f64, f64)> {
    let w = WeightConstants::new(t)?;
    let moment = |p: f64| quadratic_form(&t_mat.power_mat(p), x);
    let m = moment(1.0)?;
    let (half, quarter) = (moment(0.5)?, moment(0.25)?);
    let tight = ppow(m, t - 0.5)
        * (2.0 * w.big_r * (ppow(m, 0.5) - half) - w.r0 * (half + ppow(m, 0.5) - 2.0 * quarter * ppow(m, 0.25)));
    Ok((ppow(m, t) - moment(t)?, tight))
}

/// `(lower, middle, upper)` of the unswapped high-branch two-map chain with
/// identity maps.
pub fn two_map_high_unswapped(a: &HpdMatrix, b: &HpdMatrix, x: &UnitVector, t: f64) -> Result<(f64, f64, f64)> {
    let w = WeightConstants::new(t)?;
    let p = |e: f64| quadratic_form(&a.power_mat(e), x);
    let q = |e: f64| quadratic_form(&b.power_mat(e), x);
    let (p1, q1) = (p(1.0)?, q(1.0)?);
    let cross = p(0.5)? * q(0.5)?;
    let d = p1 + q1 - 2.0 * cross;
    let middle = (1.0 - t) * p1 + t * q1 - p(1.0 - t)? * q(t)?;
    let lower = w.big_r * d + w.r0 * (cross + p1 - 2.0 * p(0.25)? * q(0.75)?);
    let upper = w.r * d - w.r0 * (cross + p1 - 2.0 * p(0.75)? * q(0.25)?);
    Ok((lower, middle, upper))
}

/// A violating instance, with the relative slack of the alternative form and
/// of the form used by the crate on the same instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub variant: Variant,
    pub seed: u64,
    pub trial: usize,
    pub t: f64,
    pub dim: usize,
    pub variant_slack: f64,
    pub corrected_slack: f64,
}

fn rel(slack: f64, scale: f64) -> f64 {
    slack / scale.max(f64::MIN_POSITIVE)
}

/// Evaluates one random instance; returns `(variant, corrected)` relative
/// slacks and the instance shape.
fn probe(variant: Variant, rng: &mut ChaCha8Rng) -> Result<(f64, f64, f64, usize)> {
    match variant {
        Variant::ZhaoSwappedWeights => {
            let t = rng.random_range(0.5..1.0);
            let a = 10f64.powf(rng.random_range(-3.0..3.0));
            let b = 10f64.powf(rng.random_range(-3.0..3.0));
            let scale = a.max(b);
            Ok((rel(zhao_swapped_weights(t, a, b)?.slack(), scale), rel(zhao_bounds(t, a, b)?.slack(), scale), t, 1))
        }
        Variant::UpperSeriesShifted => {
            let n = rng.random_range(2..=4);
            let t = rng.random_range(0.0..1.0);
            let a = random_hpd_with(rng, n, 1e4, Field::Complex);
            let b = random_hpd_with(rng, n, 1e4, Field::Complex);
            let p = MeanPencil::new(&a, &b)?;
            let terms = rng.random_range(1..=6);
            let am = p.arithmetic(t);
            let scale = a.norm() + b.norm();
            let alt = upper_series_shifted(&p, t, terms)?;
            let fixed = upper_series_corrected(&p, t, terms)?;
            Ok((rel(lambda_min(&(alt - &am)), scale), rel(lambda_min(&(fixed - &am)), scale), t, n))
        }
        Variant::SimpleReverseQuarter => {
            let n = rng.random_range(2..=4);
            let t = rng.random_range(0.001..0.5);
            let cap = [10.0, 100.0, 1e4][rng.random_range(0..3)];
            let t_mat = random_hpd_with(rng, n, cap, Field::Complex);
            let x = UnitVector::random(rng, n, Field::Complex);
            let (middle, tight) = simple_reverse_quarter(&t_mat, &x, t)?;
            let fixed = hm_reverse_simple(&t_mat, &x, t)?;
            let m = quadratic_form(t_mat.as_mat(), &x)?;
            Ok((rel(tight - middle, m), rel(fixed.bound_tight - fixed.middle, m), t, n))
        }
        Variant::TwoMapHighUnswapped => {
            let n = rng.random_range(2..=4);
            let t = rng.random_range(0.5001..0.999);
            let a = random_hpd_with(rng, n, 100.0, Field::Complex);
            let b = random_hpd_with(rng, n, 100.0, Field::Complex);
            let x = UnitVector::random(rng, n, Field::Complex);
            let (lo, mid, up) = two_map_high_unswapped(&a, &b, &x, t)?;
            let id = PositiveMap::Identity { dim: n };
            let fixed = hm_two_map_chain(&id, &id, &a, &b, &x, t)?;
            let scale = quadratic_form(a.as_mat(), &x)?.max(quadratic_form(b.as_mat(), &x)?);
            let fixed_slack = (fixed.middle - fixed.lower).min(fixed.upper - fixed.middle);
            Ok((rel((mid - lo).min(up - mid), scale), rel(fixed_slack, scale), t, n))
        }
    }
}

/// Searches up to `budget` seeded instances for relative slack below
/// `-threshold`; returns the first one found.
pub fn search_counterexample(variant: Variant, seed: u64, budget: usize, threshold: f64) -> Result<Option<Counterexample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..budget {
        let (variant_slack, corrected_slack, t, dim) = probe(variant, &mut rng)?;
        if variant_slack < -threshold {
            return Ok(Some(Counterexample { variant, seed, trial, t, dim, variant_slack, corrected_slack }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_variant_has_a_counterexample() {
        for v in Variant::ALL {
            let found = search_counterexample(v, 2024, 20_000, 1e-3).unwrap();
            let ce = found.unwrap_or_else(|| panic!("no counterexample for {v:?}"));
            assert!(ce.variant_slack < -1e-3, "{ce:?}");
            assert!(ce.corrected_slack >= -1e-9, "corrected form fails too: {ce:?}");
        }
    }

    #[test]
    fn zhao_swap_explicit() {
        let chain = zhao_swapped_weights(0.9, 1.0, 100.0).unwrap();
        assert!(chain.slack() < -1.0);
        assert!(zhao_bounds(0.9, 1.0, 100.0).unwrap().holds(1e-12));
        let low = zhao_swapped_weights(0.3, 1.0, 100.0).unwrap();
        assert_eq!(low, zhao_bounds(0.3, 1.0, 100.0).unwrap());
    }
}
