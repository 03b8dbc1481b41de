//! Sum-type consequences of the reverse Ando bounds: Hoelder and
//! Cauchy-Schwarz differences, operator concavity of `x^t`, Tsallis relative
//! operator entropy, and the regularized mean for singular second operands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matspd::{
    identity, lambda_min, loewner_geq_scaled, spectral_norm, HpdMatrix, Mat, MeanPencil, SlackReport, DEFAULT_TOL,
};
use crate::scalar_young::{check_open_weight, check_weight, Branch, WeightConstants};

/// Right-hand side of a Hoelder-type reverse, assembled from `G(p)`
/// (a sum of means) and `H(p)` (the mean of the sums).
struct SumForm<'a> {
    sum_a: &'a Mat,
    sum_b: &'a Mat,
    g: &'a dyn Fn(f64) -> Mat,
    h: &'a dyn Fn(f64) -> Mat,
}

impl SumForm<'_> {
    /// `R (sum_a + sum_b - 2 G(1/2))` minus one `r0` correction built from
    /// `G` and one built from `H`; which operand gets the `3/4` power depends
    /// on the branch.
    fn rhs(&self, t: f64) -> Result<Mat> {
        let w = WeightConstants::new(t)?;
        let (g, h) = (self.g, self.h);
        let g_half = g(0.5);
        let h_half = h(0.5);
        let head = (self.sum_a + self.sum_b - g_half.scale(2.0)).scale(w.big_r);
        let (first, second) = match Branch::for_weight(t) {
            Branch::Low => (
                &g_half + self.sum_b - g(0.75).scale(2.0),
                &h_half + self.sum_a - h(0.25).scale(2.0),
            ),
            Branch::High => (
                &h_half + self.sum_b - h(0.75).scale(2.0),
                &g_half + self.sum_a - g(0.25).scale(2.0),
            ),
        };
        Ok(head - (first + second).scale(w.r0))
    }
}

fn check_lists(a_list: &[HpdMatrix], b_list: &[HpdMatrix]) -> Result<usize> {
    if a_list.is_empty() {
        return Err(Error::domain("operand lists are empty"));
    }
    if a_list.len() != b_list.len() {
        return Err(Error::DimensionMismatch { expected: a_list.len(), got: b_list.len() });
    }
    let n = a_list[0].dim();
    for m in a_list.iter().chain(b_list) {
        if m.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
        }
    }
    Ok(n)
}

fn sum_of(list: &[HpdMatrix]) -> Mat {
    list.iter().skip(1).fold(list[0].as_mat().clone(), |acc, m| acc + m.as_mat())
}

/// Sums and pencils shared by the Hoelder and Tsallis operations.
struct SumPencils {
    pencils: Vec<MeanPencil>,
    total: MeanPencil,
    sum_a: Mat,
    sum_b: Mat,
    reference: f64,
}

impl SumPencils {
    fn new(a_list: &[HpdMatrix], b_list: &[HpdMatrix]) -> Result<Self> {
        check_lists(a_list, b_list)?;
        let pencils = a_list.iter().zip(b_list).map(|(a, b)| MeanPencil::new(a, b)).collect::<Result<Vec<_>>>()?;
        let sum_a = sum_of(a_list);
        let sum_b = sum_of(b_list);
        let total = MeanPencil::new(&HpdMatrix::from_hermitized(sum_a.clone())?, &HpdMatrix::from_hermitized(sum_b.clone())?)?;
        let reference = spectral_norm(&sum_a) + spectral_norm(&sum_b);
        Ok(Self { pencils, total, sum_a, sum_b, reference })
    }

    /// `sum_i A_i #_p B_i`.
    fn sum_of_means(&self, p: f64) -> Mat {
        let mut it = self.pencils.iter();
        let first = it.next().expect("nonempty").geometric(p);
        it.fold(first, |acc, q| acc + q.geometric(p))
    }

    fn holder_gap(&self, t: f64) -> Mat {
        self.total.geometric(t) - self.sum_of_means(t)
    }

    fn holder_rhs(&self, t: f64) -> Result<Mat> {
        let g = |p: f64| self.sum_of_means(p);
        let h = |p: f64| self.total.geometric(p);
        SumForm { sum_a: &self.sum_a, sum_b: &self.sum_b, g: &g, h: &h }.rhs(t)
    }
}

#[derive(Debug, Clone)]
pub struct HolderReverse {
    /// `(sum A_i) #_t (sum B_i) - sum (A_i #_t B_i)`.
    pub lhs: Mat,
    pub rhs: Mat,
    /// `lhs <= rhs`.
    pub report: SlackReport,
    /// `lhs >= 0`, the Hoelder inequality itself.
    pub holder_report: SlackReport,
}

/// Reverse of the operator Hoelder inequality for `sum A_i` and `sum B_i`.
pub fn holder_reverse(a_list: &[HpdMatrix], b_list: &[HpdMatrix], t: f64) -> Result<HolderReverse> {
    check_open_weight(t)?;
    let s = SumPencils::new(a_list, b_list)?;
    let lhs = s.holder_gap(t);
    let rhs = s.holder_rhs(t)?;
    let zero = Mat::zeros(lhs.nrows(), lhs.ncols());
    let n = lhs.nrows();
    Ok(HolderReverse {
        report: loewner_geq_scaled(&rhs, &lhs, DEFAULT_TOL, s.reference)?
            .labeled("holder_rev", "holder_gap", "holder_rhs")
            .at(t, n),
        holder_report: loewner_geq_scaled(&lhs, &zero, DEFAULT_TOL, s.reference)?
            .labeled("holder_rev", "0", "holder_gap")
            .at(t, n),
        lhs,
        rhs,
    })
}

#[derive(Debug, Clone)]
pub struct ConcavityReverse {
    /// `(sum w_i T_i)^t - sum w_i T_i^t`.
    pub lhs: Mat,
    pub rhs: Mat,
    /// `lhs <= rhs`.
    pub report: SlackReport,
    /// `lhs >= 0`.
    pub concavity_report: SlackReport,
}

/// Reverse of Jensen's operator inequality for the concave `x -> x^t`.
pub fn concavity_reverse(weights: &[f64], ts: &[HpdMatrix], t: f64) -> Result<ConcavityReverse> {
    check_open_weight(t)?;
    if weights.len() != ts.len() || ts.is_empty() {
        return Err(Error::domain("weights and operators must be nonempty lists of equal length"));
    }
    if weights.iter().any(|&w| w.is_nan() || w <= 0.0 || !w.is_finite()) {
        return Err(Error::domain("weights must be positive"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("weights sum to {total}, not 1")));
    }
    let n = ts[0].dim();
    if let Some(m) = ts.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
    }
    let sum = ts.iter().zip(weights).fold(Mat::zeros(n, n), |acc, (m, &w)| acc + m.as_mat().scale(w));
    let sum = HpdMatrix::from_hermitized(sum)?;
    let wp = |p: f64| ts.iter().zip(weights).fold(Mat::zeros(n, n), |acc, (m, &w)| acc + m.power_mat(p).scale(w));
    let sp = |p: f64| sum.power_mat(p);
    let id = identity(n);
    let rhs = SumForm { sum_a: &id, sum_b: sum.as_mat(), g: &wp, h: &sp }.rhs(t)?;
    let lhs = sp(t) - wp(t);
    let reference = 1.0 + sum.norm();
    let zero = Mat::zeros(n, n);
    Ok(ConcavityReverse {
        report: loewner_geq_scaled(&rhs, &lhs, DEFAULT_TOL, reference)?
            .labeled("concavity_rev", "jensen_gap", "rhs")
            .at(t, n),
        concavity_report: loewner_geq_scaled(&lhs, &zero, DEFAULT_TOL, reference)?
            .labeled("concavity_rev", "0", "jensen_gap")
            .at(t, n),
        lhs,
        rhs,
    })
}

fn check_tsallis_weight(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("Tsallis weight {t} outside (0, 1]")));
    }
    Ok(())
}

/// `T_t(A|B) = (A #_t B - A) / t`.
pub fn tsallis_entropy(a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<Mat> {
    check_tsallis_weight(t)?;
    let p = MeanPencil::new(a, b)?;
    Ok((p.geometric(t) - a.as_mat()).unscale(t))
}

/// Certifies `sum T_t(A_i|B_i) <= T_t(sum A_i | sum B_i)`.
pub fn tsallis_superadditivity(a_list: &[HpdMatrix], b_list: &[HpdMatrix], t: f64) -> Result<SlackReport> {
    check_tsallis_weight(t)?;
    let s = SumPencils::new(a_list, b_list)?;
    let whole = (s.total.geometric(t) - &s.sum_a).unscale(t);
    let parts = s
        .pencils
        .iter()
        .fold(Mat::zeros(s.sum_a.nrows(), s.sum_a.ncols()), |acc, p| acc + (p.geometric(t) - p.a()).unscale(t));
    Ok(loewner_geq_scaled(&whole, &parts, DEFAULT_TOL, s.reference / t)?
        .labeled("tsallis_super", "sum_of_entropies", "entropy_of_sums")
        .at(t, s.sum_a.nrows()))
}

#[derive(Debug, Clone)]
pub struct TsallisReverse {
    /// `T_t(sum A_i | sum B_i) - sum T_t(A_i|B_i)`.
    pub gap: Mat,
    pub rhs: Mat,
    pub report: SlackReport,
}

/// Reverse of Tsallis super-additivity; the bound is the Hoelder reverse
/// divided by `t`.
pub fn tsallis_reverse(a_list: &[HpdMatrix], b_list: &[HpdMatrix], t: f64) -> Result<TsallisReverse> {
    check_open_weight(t)?;
    let s = SumPencils::new(a_list, b_list)?;
    let whole = (s.total.geometric(t) - &s.sum_a).unscale(t);
    let parts = s
        .pencils
        .iter()
        .fold(Mat::zeros(s.sum_a.nrows(), s.sum_a.ncols()), |acc, p| acc + (p.geometric(t) - p.a()).unscale(t));
    let gap = whole - parts;
    let rhs = s.holder_rhs(t)?.unscale(t);
    let report = loewner_geq_scaled(&rhs, &gap, DEFAULT_TOL, s.reference / t)?
        .labeled("tsallis_rev", "tsallis_gap", "rhs")
        .at(t, gap.nrows());
    Ok(TsallisReverse { gap, rhs, report })
}

/// Number of trailing differences that must be non-increasing, out of `len`.
fn tail_len(len: usize) -> usize {
    len.div_ceil(2)
}

/// Default `eps_k = 10^-k ||B||` for `k = 1..=10`; `||A||` stands in for a
/// zero `B`.
pub fn default_eps_schedule(a: &HpdMatrix, b: &Mat) -> Vec<f64> {
    let base = spectral_norm(b);
    let base = if base > 0.0 { base } else { a.norm() };
    (1..=10).map(|k| base * 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub eps: Vec<f64>,
    /// `lambda_min(M(eps_k) - M(eps_(k+1)))` for each step.
    pub monotone_slacks: Vec<f64>,
    /// `||M(eps_k) - M(eps_(k+1))||`.
    pub differences: Vec<f64>,
    pub scale: f64,
    pub tol: f64,
    /// Every step is Loewner non-increasing within `tol * scale`.
    pub monotone: bool,
    /// The trailing half of `differences` is non-increasing.
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.converged
    }

    /// The worst monotonicity step as a report.
    pub fn worst(&self, t: f64, dim: usize) -> SlackReport {
        let worst = self.monotone_slacks.iter().copied().fold(f64::INFINITY, f64::min);
        let worst = if worst.is_finite() { worst } else { 0.0 };
        let mut r = SlackReport::new(worst, self.scale, self.tol).labeled("eps_limit", "M(eps_next)", "M(eps)").at(t, dim);
        r.passed = self.passed();
        r
    }
}

/// `A #_t (B + eps I)` along a decreasing schedule; returns the last iterate.
/// Iterates decrease in Loewner order toward `A #_t B` as `eps` shrinks.
pub fn epsilon_regularized_mean(a: &HpdMatrix, b: &Mat, t: f64, eps: &[f64]) -> Result<(Mat, ConvergenceReport)> {
    check_weight(t)?;
    if b.shape() != (a.dim(), a.dim()) {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.nrows() });
    }
    let b_norm = spectral_norm(b);
    if lambda_min(b) < -1e-12 * b_norm.max(a.norm()) {
        return Err(Error::domain("second operand is not positive semidefinite"));
    }
    if eps.is_empty() || eps.iter().any(|&e| e.is_nan() || e <= 0.0) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("epsilon schedule must be positive and strictly decreasing"));
    }
    let n = a.dim();
    let iterates = eps
        .iter()
        .map(|&e| {
            let shifted = HpdMatrix::from_hermitized(b + identity(n).scale(e))?;
            Ok(MeanPencil::new(a, &shifted)?.geometric(t))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = a.norm() + b_norm + eps[0];
    let (monotone_slacks, differences): (Vec<f64>, Vec<f64>) = iterates
        .windows(2)
        .map(|w| {
            let d = &w[0] - &w[1];
            (lambda_min(&d), spectral_norm(&d))
        })
        .unzip();
    let monotone = monotone_slacks.iter().all(|&s| s >= -DEFAULT_TOL * scale);
    let tail = &differences[differences.len() - tail_len(differences.len())..];
    let converged = tail.windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale);
    let last = iterates.into_iter().last().expect("nonempty schedule");
    Ok((
        last,
        ConvergenceReport {
            eps: eps.to_vec(),
            monotone_slacks,
            differences,
            scale,
            tol: DEFAULT_TOL,
            monotone,
            converged,
        },
    ))
}
