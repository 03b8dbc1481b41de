//! Hermitian positive-definite matrices and the weighted operator means.
//!
//! All spectral work goes through a Hermitian eigendecomposition; every
//! composite result is re-Hermitized (`(M + M*)/2`) before it is
//! eigen-analysed so that roundoff asymmetry never reaches `lambda_min`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<Complex64>;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 64;

/// Default relative Loewner tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `frac_power` refuses operands with `lambda_min <= ILL_CONDITIONED * lambda_max`.
pub const ILL_CONDITIONED: f64 = 1e-13;

/// Relative bound on `|M - M*|` accepted by [`HpdMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn hermitize(m: &Mat) -> Mat {
    (m + m.adjoint()).scale(0.5)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn from_real_diagonal(d: &[f64]) -> Mat {
    Mat::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| Complex64::new(x, 0.0))))
}

/// Eigenvalues of `(M + M*)/2`, ascending.
pub fn eigenvalues(m: &Mat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn lambda_min(m: &Mat) -> f64 {
    hermitize(m).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Spectral norm of the Hermitian part of `m`.
pub fn spectral_norm(m: &Mat) -> f64 {
    hermitize(m).symmetric_eigenvalues().iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest entrywise modulus of `m - m*`.
pub fn hermitian_defect(m: &Mat) -> f64 {
    (m - m.adjoint()).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `sum_i u_i f(lambda_i) u_i*` from an eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl HermitianEigen {
    pub fn new(m: &Mat) -> Self {
        let eig = hermitize(m).symmetric_eigen();
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `U diag(f(lambda)) U*`, Hermitized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        sandwich_diag(&self.vectors, self.values.iter().map(|&l| f(l)))
    }
}

/// `W diag(d) W*`, Hermitized.
fn sandwich_diag(w: &Mat, d: impl Iterator<Item = f64>) -> Mat {
    let mut scaled = w.clone();
    for (mut col, di) in scaled.column_iter_mut().zip(d) {
        col.scale_mut(di);
    }
    hermitize(&(scaled * w.adjoint()))
}

/// A Hermitian positive-definite matrix with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct HpdMatrix {
    mat: Mat,
    eig: HermitianEigen,
}

impl HpdMatrix {
    /// Validates Hermiticity (within `1e-12 ||M||`) and `lambda_min > 0`.
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::domain(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        if n == 0 || n > MAX_DIM {
            return Err(Error::domain(format!("dimension {n} outside 1..={MAX_DIM}")));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("matrix has non-finite entries"));
        }
        let norm = spectral_norm(&m);
        if hermitian_defect(&m) > HERMITIAN_TOL * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::domain("matrix is not Hermitian"));
        }
        Self::from_hermitized(m)
    }

    /// Hermitizes `m` first, then checks positive definiteness.
    pub fn from_hermitized(m: Mat) -> Result<Self> {
        let mat = hermitize(&m);
        let eig = HermitianEigen::new(&mat);
        let (min, max) = (eig.min(), eig.max());
        if min.is_nan() || min <= 0.0 {
            return Err(Error::domain(format!(
                "matrix is not positive definite (lambda_min = {min:e}, lambda_max = {max:e})"
            )));
        }
        Ok(Self { mat, eig })
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(from_real_diagonal(d))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n]).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eig
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig.min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.max()
    }

    pub fn norm(&self) -> f64 {
        self.eig.max()
    }

    pub fn condition(&self) -> f64 {
        self.eig.max() / self.eig.min()
    }

    pub(crate) fn check_conditioning(&self, ratio: f64) -> Result<()> {
        let (min, max) = (self.eig.min(), self.eig.max());
        if min <= ratio * max {
            return Err(Error::IllConditioned { min, max });
        }
        Ok(())
    }

    /// `A^s` as a plain matrix, without the conditioning check.
    pub(crate) fn power_mat(&self, s: f64) -> Mat {
        self.eig.map(|l| l.powf(s))
    }
}

fn check_same_dim(a: &HpdMatrix, b: &HpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

/// `A^s = U diag(lambda^s) U*`.
pub fn frac_power(a: &HpdMatrix, s: f64) -> Result<HpdMatrix> {
    a.check_conditioning(ILL_CONDITIONED)?;
    HpdMatrix::from_hermitized(a.power_mat(s))
}

/// Precomputed data for every weighted geometric mean of one pair `(A, B)`:
/// `A #_s B = W diag(mu^s) W*` where `A^(-1/2) B A^(-1/2) = U diag(mu) U*`
/// and `W = A^(1/2) U`.
#[derive(Debug, Clone)]
pub struct MeanPencil {
    a: Mat,
    b: Mat,
    w: Mat,
    mu: Vec<f64>,
}

impl MeanPencil {
    pub fn new(a: &HpdMatrix, b: &HpdMatrix) -> Result<Self> {
        check_same_dim(a, b)?;
        a.check_conditioning(ILL_CONDITIONED)?;
        b.check_conditioning(ILL_CONDITIONED)?;
        let a_half = a.power_mat(0.5);
        let a_inv_half = a.power_mat(-0.5);
        let c = HermitianEigen::new(&(&a_inv_half * b.as_mat() * &a_inv_half));
        if c.min().is_nan() || c.min() <= 0.0 {
            return Err(Error::IllConditioned { min: c.min(), max: c.max() });
        }
        Ok(Self {
            a: a.as_mat().clone(),
            b: b.as_mat().clone(),
            w: a_half * c.vectors,
            mu: c.values,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    /// `A #_s B` for any real `s`.
    pub fn geometric(&self, s: f64) -> Mat {
        if s == 0.0 {
            return self.a.clone();
        }
        if s == 1.0 {
            return self.b.clone();
        }
        sandwich_diag(&self.w, self.mu.iter().map(|&m| m.powf(s)))
    }

    /// `A nabla_t B = (1-t) A + t B`.
    pub fn arithmetic(&self, t: f64) -> Mat {
        self.a.scale(1.0 - t) + self.b.scale(t)
    }

    /// `A #_p B + A #_(p+2h) B - 2 A #_(p+h) B`, the second difference that
    /// every refinement term is built from. Commutatively it is the square
    /// `(a^((1-p)/2) b^(p/2) - a^((1-p-2h)/2) b^((p+2h)/2))^2`.
    pub fn second_difference(&self, p: f64, h: f64) -> Mat {
        sandwich_diag(
            &self.w,
            self.mu.iter().map(|&m| {
                let x = m.powf(p);
                let y = m.powf(p + 2.0 * h);
                let z = m.powf(p + h);
                x + y - 2.0 * z
            }),
        )
    }
}

/// `A #_s B = A^(1/2) (A^(-1/2) B A^(-1/2))^s A^(1/2)`, defined for every
/// real `s` by the same congruence formula.
pub fn geometric_mean(a: &HpdMatrix, b: &HpdMatrix, s: f64) -> Result<HpdMatrix> {
    HpdMatrix::from_hermitized(MeanPencil::new(a, b)?.geometric(s))
}

pub fn arithmetic_mean(a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<HpdMatrix> {
    check_same_dim(a, b)?;
    crate::scalar_young::check_weight(t)?;
    HpdMatrix::from_hermitized(a.as_mat().scale(1.0 - t) + b.as_mat().scale(t))
}

/// `A !_t B = ((1-t) A^-1 + t B^-1)^-1`.
pub fn harmonic_mean(a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<HpdMatrix> {
    check_same_dim(a, b)?;
    crate::scalar_young::check_weight(t)?;
    let a_inv = frac_power(a, -1.0)?;
    let b_inv = frac_power(b, -1.0)?;
    let sum = HpdMatrix::from_hermitized(a_inv.as_mat().scale(1.0 - t) + b_inv.as_mat().scale(t))?;
    frac_power(&sum, -1.0)
}

/// Outcome of one Loewner-order certification `rhs >= lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub inequality_id: String,
    pub lhs_id: String,
    pub rhs_id: String,
    /// `lambda_min(rhs - lhs)`, or `rhs - lhs` for scalar inequalities.
    pub slack: f64,
    pub scale: f64,
    pub tol: f64,
    pub passed: bool,
    pub seed: u64,
    pub t: f64,
    pub dim: usize,
}

impl SlackReport {
    pub fn new(slack: f64, scale: f64, tol: f64) -> Self {
        Self {
            inequality_id: String::new(),
            lhs_id: String::new(),
            rhs_id: String::new(),
            slack,
            scale,
            tol,
            passed: slack >= -tol * scale,
            seed: 0,
            t: 0.0,
            dim: 0,
        }
    }

    pub fn labeled(mut self, id: &str, lhs: &str, rhs: &str) -> Self {
        self.inequality_id = id.to_owned();
        self.lhs_id = lhs.to_owned();
        self.rhs_id = rhs.to_owned();
        self
    }

    pub fn at(mut self, t: f64, dim: usize) -> Self {
        self.t = t;
        self.dim = dim;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Re-evaluates `passed` for another tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self.passed = self.slack >= -tol * self.scale;
        self
    }

    /// `slack / scale`, the quantity compared against `-tol`.
    pub fn relative_slack(&self) -> f64 {
        if self.scale > 0.0 {
            self.slack / self.scale
        } else {
            self.slack
        }
    }
}

/// Certifies `x >= y`: slack `lambda_min(x - y)`, passed iff
/// `slack >= -tol (||x|| + ||y||)`.
pub fn loewner_geq(x: &Mat, y: &Mat, tol: f64) -> Result<SlackReport> {
    loewner_geq_scaled(x, y, tol, 0.0)
}

/// [`loewner_geq`] with `reference` added to the scale. Difference-type
/// inequalities can have both sides cancel to roundoff size; `reference`
/// carries the magnitude of the operands they were built from.
pub fn loewner_geq_scaled(x: &Mat, y: &Mat, tol: f64, reference: f64) -> Result<SlackReport> {
    if x.shape() != y.shape() || !x.is_square() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.nrows() });
    }
    let slack = lambda_min(&(x - y));
    let scale = spectral_norm(x) + spectral_norm(y) + reference;
    Ok(SlackReport::new(slack, scale, tol).at(0.0, x.nrows()))
}

/// Certifies the scalar inequality `upper >= lower`.
pub fn scalar_geq(upper: f64, lower: f64, tol: f64, reference: f64) -> SlackReport {
    SlackReport::new(upper - lower, upper.abs() + lower.abs() + reference, tol).at(0.0, 1)
}

/// Entry type of generated matrices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    #[default]
    Complex,
    Real,
}

fn gaussian(rng: &mut impl Rng, field: Field) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = match field {
        Field::Complex => rng.sample(StandardNormal),
        Field::Real => 0.0,
    };
    Complex64::new(re, im)
}

pub fn ginibre(rng: &mut impl Rng, n: usize, field: Field) -> Mat {
    Mat::from_fn(n, n, |_, _| gaussian(rng, field))
}

/// Haar-distributed unitary (orthogonal for `Field::Real`): QR of a Ginibre
/// matrix with the phases of `diag(R)` folded back into `Q`.
pub fn random_unitary(rng: &mut impl Rng, n: usize, field: Field) -> Mat {
    let qr = ginibre(rng, n, field).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Eigenvalues log-uniform in `[cond_cap^(-1/2), cond_cap^(1/2)]`, conjugated
/// by a random unitary.
pub fn random_hpd_with(rng: &mut impl Rng, n: usize, cond_cap: f64, field: Field) -> HpdMatrix {
    let spectrum = random_spectrum(rng, n, cond_cap);
    let u = random_unitary(rng, n, field);
    HpdMatrix::from_hermitized(sandwich_diag(&u, spectrum.into_iter()))
        .expect("spectrum is positive")
}

fn random_spectrum(rng: &mut impl Rng, n: usize, cond_cap: f64) -> Vec<f64> {
    let half_log = 0.5 * cond_cap.max(1.0).ln();
    (0..n).map(|_| (half_log * (2.0 * rng.random::<f64>() - 1.0)).exp()).collect()
}

/// Deterministic in `seed`.
pub fn random_hpd(n: usize, cond_cap: f64, seed: u64) -> Result<HpdMatrix> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::domain(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    if cond_cap.is_nan() || cond_cap < 1.0 {
        return Err(Error::domain(format!("cond_cap = {cond_cap} must be >= 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_hpd_with(&mut rng, n, cond_cap, Field::Complex))
}

/// Positive semidefinite with exactly `zeros` zero eigenvalues; the remaining
/// spectrum is log-uniform as in [`random_hpd_with`].
pub fn random_psd_singular(rng: &mut impl Rng, n: usize, zeros: usize, cond_cap: f64, field: Field) -> Mat {
    let mut spectrum = random_spectrum(rng, n, cond_cap);
    for l in spectrum.iter_mut().take(zeros.min(n)) {
        *l = 0.0;
    }
    let u = random_unitary(rng, n, field);
    sandwich_diag(&u, spectrum.into_iter())
}

/// `U diag(sigma) V` with singular values log-uniform in `[1/2, 2]`.
pub fn random_invertible(rng: &mut impl Rng, n: usize, field: Field) -> Mat {
    let u = random_unitary(rng, n, field);
    let v = random_unitary(rng, n, field);
    let sigma = random_spectrum(rng, n, 16.0);
    let mut us = u;
    for (mut col, s) in us.column_iter_mut().zip(sigma) {
        col.scale_mut(s);
    }
    us * v
}

/// Positive definite with unit trace.
pub fn random_density(rng: &mut impl Rng, n: usize, field: Field) -> Mat {
    let p = random_hpd_with(rng, n, 100.0, field).into_mat();
    let tr = p.trace().re;
    p.scale(1.0 / tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn max_abs_diff(x: &Mat, y: &Mat) -> f64 {
        (x - y).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut m = from_real_diagonal(&[1.0, 2.0]);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(HpdMatrix::new(m).is_err());
        assert!(HpdMatrix::from_diagonal(&[1.0, -1.0]).is_err());
        assert!(HpdMatrix::from_diagonal(&[1.0, 0.0]).is_err());
        assert!(HpdMatrix::new(Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn frac_power_identities() {
        let a = random_hpd(4, 100.0, 3).unwrap();
        let one = frac_power(&a, 1.0).unwrap();
        assert!(max_abs_diff(one.as_mat(), a.as_mat()) < 1e-12 * a.norm());
        let zero = frac_power(&a, 0.0).unwrap();
        assert!(max_abs_diff(zero.as_mat(), &identity(4)) < 1e-12);

        let d = HpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let r = frac_power(&d, 0.5).unwrap();
        assert!(max_abs_diff(r.as_mat(), &from_real_diagonal(&[2.0, 3.0])) < 1e-14);

        for seed in 0..20 {
            let a = random_hpd(5, 1e3, seed).unwrap();
            let p = frac_power(&a, 0.37).unwrap();
            let q = frac_power(&a, -0.37).unwrap();
            assert!(max_abs_diff(&(p.as_mat() * q.as_mat()), &identity(5)) < 1e-10);
        }
    }

    #[test]
    fn frac_power_rejects_ill_conditioned() {
        let a = HpdMatrix::from_diagonal(&[1.0, 1e-14]).unwrap();
        assert!(matches!(frac_power(&a, 0.5), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn geometric_mean_examples() {
        let a = random_hpd(3, 50.0, 11).unwrap();
        let b = random_hpd(3, 50.0, 12).unwrap();
        for s in [-0.5, 0.0, 0.3, 1.0, 1.7] {
            let g = geometric_mean(&a, &a, s).unwrap();
            assert!(max_abs_diff(g.as_mat(), a.as_mat()) < 1e-12 * a.norm());
        }
        assert!(max_abs_diff(geometric_mean(&a, &b, 0.0).unwrap().as_mat(), a.as_mat()) < 1e-12);
        assert!(max_abs_diff(geometric_mean(&a, &b, 1.0).unwrap().as_mat(), b.as_mat()) < 1e-12);

        let da = HpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let db = HpdMatrix::from_diagonal(&[9.0, 1.0]).unwrap();
        let g = geometric_mean(&da, &db, 0.5).unwrap();
        assert!(max_abs_diff(g.as_mat(), &from_real_diagonal(&[3.0, 2.0])) < 1e-14);
    }

    #[test]
    fn arithmetic_and_harmonic_examples() {
        let a = random_hpd(3, 10.0, 5).unwrap();
        assert!(max_abs_diff(arithmetic_mean(&a, &a, 0.3).unwrap().as_mat(), a.as_mat()) < 1e-12);
        assert!(max_abs_diff(harmonic_mean(&a, &a, 0.3).unwrap().as_mat(), a.as_mat()) < 1e-11);

        let i = HpdMatrix::identity(2);
        let three = HpdMatrix::from_diagonal(&[3.0, 3.0]).unwrap();
        let am = arithmetic_mean(&i, &three, 0.5).unwrap();
        let hm = harmonic_mean(&i, &three, 0.5).unwrap();
        assert!(max_abs_diff(am.as_mat(), &from_real_diagonal(&[2.0, 2.0])) < 1e-14);
        assert!(max_abs_diff(hm.as_mat(), &from_real_diagonal(&[1.5, 1.5])) < 1e-14);
    }

    #[test]
    fn loewner_examples() {
        let a = random_hpd(3, 10.0, 1).unwrap();
        let r = loewner_geq(a.as_mat(), a.as_mat(), DEFAULT_TOL).unwrap();
        assert!(r.slack.abs() < 1e-15 && r.passed);

        let x = from_real_diagonal(&[2.0, 2.0]);
        let y = from_real_diagonal(&[1.0, 3.0]);
        let r = loewner_geq(&x, &y, 0.1).unwrap();
        assert!((r.slack + 1.0).abs() < 1e-14);
        assert!(!r.passed);

        let shifted = a.as_mat() + identity(3).scale(1e-6);
        let r = loewner_geq(&shifted, a.as_mat(), DEFAULT_TOL).unwrap();
        assert!((r.slack - 1e-6).abs() < 1e-12 && r.passed);

        assert!(loewner_geq(&x, &identity(3), 1e-9).is_err());
    }

    #[test]
    fn random_hpd_contract() {
        let a = random_hpd(6, 1e4, 99).unwrap();
        let b = random_hpd(6, 1e4, 99).unwrap();
        assert_eq!(a.as_mat(), b.as_mat());
        assert!(a.condition() <= 1e4 * (1.0 + 1e-9));

        let s = random_hpd(1, 1e4, 7).unwrap();
        assert!(s.as_mat()[(0, 0)].re > 0.0);

        let c = random_hpd(4, 1.0, 8).unwrap();
        assert!(max_abs_diff(c.as_mat(), &identity(4).scale(c.as_mat()[(0, 0)].re)) < 1e-12);

        assert!(random_hpd(0, 10.0, 1).is_err());
        assert!(random_hpd(3, 0.5, 1).is_err());
    }

    #[test]
    fn unitary_and_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(&mut rng, 5, Field::Complex);
        assert!(max_abs_diff(&(u.adjoint() * &u), &identity(5)) < 1e-12);
        let rho = random_density(&mut rng, 4, Field::Real);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.iter().all(|z| z.im == 0.0));
        let p = random_psd_singular(&mut rng, 4, 1, 100.0, Field::Complex);
        let ev = eigenvalues(&p);
        assert!(ev[0].abs() < 1e-12 && ev[1] > 0.0);
    }
}
