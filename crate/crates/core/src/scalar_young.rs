//! Scalar Young refinements and reverses.
//!
//! Two conventions appear here and it matters which one a caller uses:
//!
//! - [`sababheh_bounds`] puts the weight `t` on the *first* argument:
//!   the gap is `t a + (1 - t) b - a^t b^(1-t)`.
//! - [`zhao_bounds`] and [`kittaneh_bounds`] put the weight on the *second*
//!   argument, matching the operator means `A nabla_t B = (1-t)A + tB` and
//!   `A #_t B`: the gap is `(1 - t) a + t b - a^(1-t) b^t`.
//!
//! Consequently an operator bound evaluated on diagonal `A = diag(a_i)`,
//! `B = diag(b_i)` reduces to `sababheh_bounds(t, b_i, a_i, N)` (arguments
//! swapped) but to `zhao_bounds(t, a_i, b_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of refinement terms. Past this the dyadic
/// exponents `2^-j` fall below double-precision resolution of the bounds.
pub const MAX_TERMS: usize = 16;

/// Default number of refinement terms.
pub const DEFAULT_TERMS: usize = 4;

/// The weight `t` together with `r = min{t, 1-t}`, `R = max{t, 1-t}` and
/// `r0 = min{2r, 1-2r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConstants {
    pub t: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r0: f64,
}

impl WeightConstants {
    pub fn new(t: f64) -> Result<Self> {
        check_weight(t)?;
        let r = t.min(1.0 - t);
        let big_r = t.max(1.0 - t);
        let r0 = (2.0 * r).min(1.0 - 2.0 * r);
        Ok(Self { t, r, big_r, r0 })
    }
}

pub fn weight_constants(t: f64) -> Result<WeightConstants> {
    WeightConstants::new(t)
}

pub(crate) fn check_weight(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("weight t = {t} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_open_weight(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("weight t = {t} outside (0, 1)")));
    }
    Ok(())
}

fn check_terms(n: usize) -> Result<()> {
    if n == 0 || n > MAX_TERMS {
        return Err(Error::domain(format!(
            "number of refinement terms N = {n} outside 1..={MAX_TERMS}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("{name} = {x} must be positive and finite")));
    }
    Ok(())
}

/// `x^p` for `x > 0`, evaluated as `exp(p ln x)`.
#[inline]
pub(crate) fn ppow(x: f64, p: f64) -> f64 {
    (p * x.ln()).exp()
}

/// `floor(2^e * t)`. Scaling by a power of two is exact in binary floating
/// point, so the floor never sees a rounded product.
#[inline]
fn dyadic_floor(t: f64, e: u32) -> i64 {
    (t * f64::from(1u32 << e)).floor() as i64
}

/// `r_j(t) = floor(2^j t)`.
pub fn r_index(t: f64, j: u32) -> i64 {
    dyadic_floor(t, j)
}

/// `k_j(t) = floor(2^(j-1) t)`.
pub fn k_index(t: f64, j: u32) -> i64 {
    dyadic_floor(t, j - 1)
}

/// `s_j(t) = (-1)^r_j 2^(j-1) t + (-1)^(r_j + 1) floor((r_j + 1) / 2)`.
pub fn s_coefficient(t: f64, j: u32) -> f64 {
    let r = r_index(t, j);
    let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
    let half = (r + 1).div_euclid(2) as f64;
    sign * f64::from(1u32 << (j - 1)) * t - sign * half
}

/// Per-index data of the refinement series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub j: u32,
    pub r: i64,
    pub k: i64,
    pub s: f64,
    /// `k_j(t) / 2^(j-1)`.
    pub alpha: f64,
    /// `2^-j k_j(2t)`; only meaningful for `t <= 1/2`.
    pub beta: f64,
    /// `2^(1-j) k_j(2 - 2t)`; lies in `[0, 1]` only for `t >= 1/2`.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementSchedule {
    pub t: f64,
    pub entries: Vec<ScheduleEntry>,
}

impl RefinementSchedule {
    pub fn new(t: f64, n: usize) -> Result<Self> {
        check_weight(t)?;
        check_terms(n)?;
        let entries = (1..=n as u32)
            .map(|j| {
                let k = k_index(t, j);
                let scale = f64::from(1u32 << (j - 1));
                ScheduleEntry {
                    j,
                    r: r_index(t, j),
                    k,
                    s: s_coefficient(t, j),
                    alpha: k as f64 / scale,
                    beta: k_index(2.0 * t, j) as f64 / (2.0 * scale),
                    gamma: k_index(2.0 - 2.0 * t, j) as f64 / scale,
                }
            })
            .collect();
        Ok(Self { t, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScheduleEntry> {
        self.entries.iter()
    }
}

pub fn refinement_schedule(t: f64, n: usize) -> Result<RefinementSchedule> {
    RefinementSchedule::new(t, n)
}

/// The refinement series
/// `S_N(t; a, b) = sum_j s_j(t) (b^((2^(j-1) - k_j)/2^j) a^(k_j/2^j)
///                               - a^((k_j+1)/2^j) b^((2^(j-1) - k_j - 1)/2^j))^2`.
pub fn scalar_sn(t: f64, a: f64, b: f64, n: usize) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let schedule = RefinementSchedule::new(t, n)?;
    Ok(sn_from_schedule(&schedule, a.ln(), b.ln()))
}

fn sn_from_schedule(schedule: &RefinementSchedule, ln_a: f64, ln_b: f64) -> f64 {
    schedule
        .iter()
        .map(|e| {
            if e.s == 0.0 {
                return 0.0;
            }
            let half = f64::from(1u32 << (e.j - 1));
            let k = e.k as f64;
            let denom = 2.0 * half;
            let first = (((half - k) * ln_b + k * ln_a) / denom).exp();
            let second = (((k + 1.0) * ln_a + (half - k - 1.0) * ln_b) / denom).exp();
            e.s * (first - second).powi(2)
        })
        .sum()
}

/// A lower <= middle <= upper chain of scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

impl Chain {
    /// `min(middle - lower, upper - middle)`; nonnegative iff the chain holds.
    pub fn slack(&self) -> f64 {
        (self.middle - self.lower).min(self.upper - self.middle)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack() >= -tol
    }
}

/// Which of the two displays of a branch-split bound to evaluate:
/// `Low` is the `t <= 1/2` form, `High` the `t >= 1/2` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Low,
    High,
}

impl Branch {
    /// At `t = 1/2` both forms are valid; the low form is used.
    pub fn for_weight(t: f64) -> Self {
        if t <= 0.5 {
            Branch::Low
        } else {
            Branch::High
        }
    }
}

/// `S_N(t; a, b) <= t a + (1-t) b - a^t b^(1-t) <= upper` with
/// `upper = (1-t)(sqrt a - sqrt b)^2 - S_N(2t; sqrt(ab), a)` for `t <= 1/2`
/// and `t (sqrt a - sqrt b)^2 - S_N(2-2t; sqrt(ab), b)` otherwise.
pub fn sababheh_bounds(t: f64, a: f64, b: f64, n: usize) -> Result<Chain> {
    sababheh_bounds_branch(t, a, b, n, Branch::for_weight(t))
}

/// [`sababheh_bounds`] with an explicit branch choice. The low branch
/// requires `t <= 1/2`, the high branch `t >= 1/2`.
pub fn sababheh_bounds_branch(t: f64, a: f64, b: f64, n: usize, branch: Branch) -> Result<Chain> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_weight(t)?;
    let (ln_a, ln_b) = (a.ln(), b.ln());
    let lower = sn_from_schedule(&RefinementSchedule::new(t, n)?, ln_a, ln_b);
    let middle = t * a + (1.0 - t) * b - ((t * ln_a) + (1.0 - t) * ln_b).exp();
    let root_gap = (a.sqrt() - b.sqrt()).powi(2);
    let ln_gm = 0.5 * (ln_a + ln_b);
    let upper = match branch {
        Branch::Low => {
            if t > 0.5 {
                return Err(Error::domain(format!("low branch needs t <= 1/2, got {t}")));
            }
            let tail = sn_from_schedule(&RefinementSchedule::new(2.0 * t, n)?, ln_gm, ln_a);
            (1.0 - t) * root_gap - tail
        }
        Branch::High => {
            if t < 0.5 {
                return Err(Error::domain(format!("high branch needs t >= 1/2, got {t}")));
            }
            let tail = sn_from_schedule(&RefinementSchedule::new(2.0 - 2.0 * t, n)?, ln_gm, ln_b);
            t * root_gap - tail
        }
    };
    Ok(Chain { lower, middle, upper })
}

/// Two-term refinement and reverse of `a^(1-t) b^t <= (1-t) a + t b`.
///
/// For `t <= 1/2`:
/// `r (sqrt a - sqrt b)^2 + r0 (ab^(1/4) - sqrt a)^2 <= gap
///  <= R (sqrt a - sqrt b)^2 - r0 (ab^(1/4) - sqrt b)^2`;
/// for `t > 1/2` the roles of `sqrt a` and `sqrt b` in the `r0` corrections
/// swap while `r` stays on the lower and `R` on the upper side.
pub fn zhao_bounds(t: f64, a: f64, b: f64) -> Result<Chain> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_open_weight(t)?;
    let w = WeightConstants::new(t)?;
    let (sa, sb) = (a.sqrt(), b.sqrt());
    let q = (a * b).sqrt().sqrt();
    let root_gap = (sa - sb).powi(2);
    let near_a = (q - sa).powi(2);
    let near_b = (q - sb).powi(2);
    let middle = (1.0 - t) * a + t * b - ppow(a, 1.0 - t) * ppow(b, t);
    let (lower, upper) = match Branch::for_weight(t) {
        Branch::Low => (w.r * root_gap + w.r0 * near_a, w.big_r * root_gap - w.r0 * near_b),
        Branch::High => (w.r * root_gap + w.r0 * near_b, w.big_r * root_gap - w.r0 * near_a),
    };
    Ok(Chain { lower, middle, upper })
}

/// `r (sqrt a - sqrt b)^2 <= (1-t) a + t b - a^(1-t) b^t <= R (sqrt a - sqrt b)^2`.
pub fn kittaneh_bounds(t: f64, a: f64, b: f64) -> Result<Chain> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let w = WeightConstants::new(t)?;
    let root_gap = (a.sqrt() - b.sqrt()).powi(2);
    Ok(Chain {
        lower: w.r * root_gap,
        middle: (1.0 - t) * a + t * b - ppow(a, 1.0 - t) * ppow(b, t),
        upper: w.big_r * root_gap,
    })
}
