//! Positive linear maps, Ando's inequality and its reverses.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matspd::{
    hermitize, identity, loewner_geq_scaled, random_density, random_invertible, random_unitary, spectral_norm, Field,
    HpdMatrix, Mat, MeanPencil, SlackReport, DEFAULT_TOL,
};
use crate::refinements::{sababheh_lower_term, sababheh_upper_correction};
use crate::scalar_young::{check_open_weight, check_weight, Branch, WeightConstants};

/// Images with `lambda_min < NEAR_SINGULAR * lambda_max` are rejected.
pub const NEAR_SINGULAR: f64 = 1e-10;

/// The kinds in the map zoo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Identity,
    Congruence,
    Pinching,
    BlockDiagSum,
    TraceFunctional,
    ConvexCombination,
}

impl MapKind {
    pub const ALL: [MapKind; 6] = [
        MapKind::Identity,
        MapKind::Congruence,
        MapKind::Pinching,
        MapKind::BlockDiagSum,
        MapKind::TraceFunctional,
        MapKind::ConvexCombination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Identity => "identity",
            MapKind::Congruence => "congruence",
            MapKind::Pinching => "pinching",
            MapKind::BlockDiagSum => "block_diag_sum",
            MapKind::TraceFunctional => "trace_functional",
            MapKind::ConvexCombination => "convex_combination",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown map kind `{s}`")))
    }
}

impl std::fmt::Display for MapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A positive linear map `M_in -> M_out`.
#[derive(Debug, Clone)]
pub enum PositiveMap {
    Identity { dim: usize },
    /// `M -> X* M X`.
    Congruence { x: Mat },
    /// Zeroes every off-diagonal block of the partition `blocks`.
    Pinching { blocks: Vec<usize> },
    /// `[C_ij] -> weight * sum_i C_ii` for `blocks` diagonal blocks of size
    /// `block_dim`. With `weight = 1` this is the map that turns Ando-type
    /// bounds into Hoelder-type bounds; `weight = 1 / blocks` is unital.
    BlockDiagSum { blocks: usize, block_dim: usize, weight: f64 },
    /// `M -> tr(M rho) I`.
    TraceFunctional { rho: Mat },
    /// `M -> sum_i w_i Phi_i(M)`, `w_i > 0`.
    ConvexCombination { parts: Vec<(f64, PositiveMap)> },
}

impl PositiveMap {
    pub fn kind(&self) -> MapKind {
        match self {
            PositiveMap::Identity { .. } => MapKind::Identity,
            PositiveMap::Congruence { .. } => MapKind::Congruence,
            PositiveMap::Pinching { .. } => MapKind::Pinching,
            PositiveMap::BlockDiagSum { .. } => MapKind::BlockDiagSum,
            PositiveMap::TraceFunctional { .. } => MapKind::TraceFunctional,
            PositiveMap::ConvexCombination { .. } => MapKind::ConvexCombination,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            PositiveMap::Identity { dim } => *dim,
            PositiveMap::Congruence { x } => x.nrows(),
            PositiveMap::Pinching { blocks } => blocks.iter().sum(),
            PositiveMap::BlockDiagSum { blocks, block_dim, .. } => blocks * block_dim,
            PositiveMap::TraceFunctional { rho } => rho.nrows(),
            PositiveMap::ConvexCombination { parts } => parts.first().map_or(0, |(_, m)| m.input_dim()),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            PositiveMap::Identity { dim } => *dim,
            PositiveMap::Congruence { x } => x.ncols(),
            PositiveMap::Pinching { blocks } => blocks.iter().sum(),
            PositiveMap::BlockDiagSum { block_dim, .. } => *block_dim,
            PositiveMap::TraceFunctional { rho } => rho.nrows(),
            PositiveMap::ConvexCombination { parts } => parts.first().map_or(0, |(_, m)| m.output_dim()),
        }
    }

    /// Declared unitality, by construction.
    pub fn is_unital(&self) -> bool {
        match self {
            PositiveMap::Identity { .. } | PositiveMap::Pinching { .. } | PositiveMap::TraceFunctional { .. } => true,
            PositiveMap::Congruence { x } => unital_defect_of(x) <= 1e-12,
            PositiveMap::BlockDiagSum { blocks, weight, .. } => (weight * *blocks as f64 - 1.0).abs() <= 1e-12,
            PositiveMap::ConvexCombination { parts } => {
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                (total - 1.0).abs() <= 1e-12 && parts.iter().all(|(_, m)| m.is_unital())
            }
        }
    }

    /// `max |Phi(I) - I|` entrywise.
    pub fn unital_defect(&self) -> Result<f64> {
        let img = self.apply(&identity(self.input_dim()))?;
        Ok((img - identity(self.output_dim())).iter().fold(0.0, |acc, z| acc.max(z.norm())))
    }

    pub fn apply(&self, m: &Mat) -> Result<Mat> {
        if m.nrows() != self.input_dim() || m.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: m.nrows() });
        }
        Ok(self.apply_unchecked(m))
    }

    fn apply_unchecked(&self, m: &Mat) -> Mat {
        match self {
            PositiveMap::Identity { .. } => m.clone(),
            PositiveMap::Congruence { x } => hermitize(&(x.adjoint() * m * x)),
            PositiveMap::Pinching { blocks } => {
                let mut out = Mat::zeros(m.nrows(), m.ncols());
                let mut start = 0;
                for &size in blocks {
                    out.view_mut((start, start), (size, size))
                        .copy_from(&m.view((start, start), (size, size)));
                    start += size;
                }
                out
            }
            PositiveMap::BlockDiagSum { blocks, block_dim, weight } => {
                let k = *block_dim;
                let mut out = Mat::zeros(k, k);
                for i in 0..*blocks {
                    out += m.view((i * k, i * k), (k, k));
                }
                out.scale(*weight)
            }
            PositiveMap::TraceFunctional { rho } => {
                let v: Complex64 = (m * rho).trace();
                identity(rho.nrows()).scale(v.re)
            }
            PositiveMap::ConvexCombination { parts } => {
                let mut out = Mat::zeros(self.output_dim(), self.output_dim());
                for (w, map) in parts {
                    out += map.apply_unchecked(m).scale(*w);
                }
                out
            }
        }
    }

    /// `Phi(M)` for positive definite `M`, rejecting near-singular images.
    pub fn apply_hpd(&self, m: &HpdMatrix) -> Result<HpdMatrix> {
        let img = HpdMatrix::from_hermitized(self.apply(m.as_mat())?)
            .map_err(|_| Error::IllConditioned { min: 0.0, max: 0.0 })?;
        img.check_conditioning(NEAR_SINGULAR)?;
        Ok(img)
    }
}

fn unital_defect_of(x: &Mat) -> f64 {
    if x.nrows() != x.ncols() {
        return f64::INFINITY;
    }
    (x.adjoint() * x - identity(x.nrows())).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn apply_map(map: &PositiveMap, m: &Mat) -> Result<Mat> {
    map.apply(m)
}

fn random_partition(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    if n == 1 {
        return vec![1];
    }
    let mut cuts: Vec<usize> = (1..n).filter(|_| rng.random_bool(0.5)).collect();
    if cuts.is_empty() {
        cuts.push(rng.random_range(1..n));
    }
    let mut blocks = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(n)) {
        blocks.push(c - prev);
        prev = c;
    }
    blocks
}

fn random_weights(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// A random map of the given kind with output dimension `dim`. With
/// `unital`, congruences use a unitary, block sums average, and convex
/// combinations mix unital parts with weights summing to one.
pub fn random_map(rng: &mut impl Rng, kind: MapKind, dim: usize, unital: bool, field: Field) -> PositiveMap {
    match kind {
        MapKind::Identity => PositiveMap::Identity { dim },
        MapKind::Congruence => {
            let x = if unital { random_unitary(rng, dim, field) } else { random_invertible(rng, dim, field) };
            PositiveMap::Congruence { x }
        }
        MapKind::Pinching => PositiveMap::Pinching { blocks: random_partition(rng, dim) },
        MapKind::BlockDiagSum => {
            let blocks = rng.random_range(2..=3);
            let weight = if unital { 1.0 / blocks as f64 } else { 1.0 };
            PositiveMap::BlockDiagSum { blocks, block_dim: dim, weight }
        }
        MapKind::TraceFunctional => PositiveMap::TraceFunctional { rho: random_density(rng, dim, field) },
        MapKind::ConvexCombination => {
            let count = rng.random_range(2..=3);
            let pool = [MapKind::Identity, MapKind::Congruence, MapKind::Pinching, MapKind::TraceFunctional];
            let mut weights = random_weights(rng, count);
            if !unital {
                let total = 0.5 + 1.5 * rng.random::<f64>();
                weights.iter_mut().for_each(|w| *w *= total);
            }
            let parts = weights
                .into_iter()
                .map(|w| {
                    let kind = pool[rng.random_range(0..pool.len())];
                    (w, random_map(rng, kind, dim, unital, field))
                })
                .collect();
            PositiveMap::ConvexCombination { parts }
        }
    }
}

/// Images of `A`, `B` and the pencil on the images.
struct MappedPair {
    pencil: MeanPencil,
    mapped: MeanPencil,
    reference: f64,
}

impl MappedPair {
    fn new(map: &PositiveMap, a: &HpdMatrix, b: &HpdMatrix) -> Result<Self> {
        let pencil = MeanPencil::new(a, b)?;
        let pa = map.apply_hpd(a)?;
        let pb = map.apply_hpd(b)?;
        let mapped = MeanPencil::new(&pa, &pb)?;
        let reference = pa.norm() + pb.norm();
        Ok(Self { pencil, mapped, reference })
    }

    /// `Phi(A) #_t Phi(B) - Phi(A #_t B)`.
    fn ando_gap(&self, map: &PositiveMap, t: f64) -> Result<Mat> {
        Ok(self.mapped.geometric(t) - map.apply(&self.pencil.geometric(t))?)
    }

    /// `2R (Phi(A) # Phi(B) - Phi(A # B) + (Phi(A) + Phi(B) - 2 Phi(A) # Phi(B)) / 2)`.
    fn loose_head(&self, map: &PositiveMap, w: &WeightConstants) -> Result<Mat> {
        let mapped_gm = self.mapped.geometric(0.5);
        let gm_image = map.apply(&self.pencil.geometric(0.5))?;
        let spread = self.mapped.second_difference(0.0, 0.5);
        Ok((mapped_gm - gm_image + spread.scale(0.5)).scale(2.0 * w.big_r))
    }
}

/// Certifies `Phi(A #_t B) <= Phi(A) #_t Phi(B)`.
pub fn ando_check(map: &PositiveMap, a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<SlackReport> {
    check_weight(t)?;
    let pair = MappedPair::new(map, a, b)?;
    let image = map.apply(&pair.pencil.geometric(t))?;
    Ok(loewner_geq_scaled(&pair.mapped.geometric(t), &image, DEFAULT_TOL, pair.reference)?
        .labeled("ando", "map(geo_t)", "geo_t(map)")
        .at(t, map.output_dim()))
}

#[derive(Debug, Clone)]
pub struct AndoReverse {
    /// `Phi(A) #_t Phi(B) - Phi(A #_t B)`.
    pub lhs: Mat,
    pub rhs: Mat,
    pub report: SlackReport,
}

/// `N`-term reverse of Ando's inequality for an arbitrary (not necessarily
/// unital) positive map:
///
/// `Phi(A) #_t Phi(B) - Phi(A #_t B) <= head - Phi(U_N(A, B)) - L_N(Phi(A), Phi(B))`
///
/// where `head` is the loose `2R` term, `U_N` the reverse-refinement series of
/// [`sababheh_upper_correction`] and `L_N` the lower series of
/// [`sababheh_lower_term`]. Evaluated literally on all of `[0, 1]`.
pub fn ando_reverse_bound(map: &PositiveMap, a: &HpdMatrix, b: &HpdMatrix, t: f64, n: usize) -> Result<AndoReverse> {
    check_weight(t)?;
    let w = WeightConstants::new(t)?;
    let pair = MappedPair::new(map, a, b)?;
    let lhs = pair.ando_gap(map, t)?;
    let upper = map.apply(&sababheh_upper_correction(&pair.pencil, t, n, Branch::for_weight(t))?)?;
    let lower = sababheh_lower_term(&pair.mapped, t, n)?;
    let rhs = pair.loose_head(map, &w)? - upper - lower;
    let report = loewner_geq_scaled(&rhs, &lhs, DEFAULT_TOL, pair.reference)?
        .labeled("ando_rev", "geo_t(map)-map(geo_t)", "reverse_bound_N")
        .at(t, map.output_dim());
    Ok(AndoReverse { lhs, rhs, report })
}

#[derive(Debug, Clone)]
pub struct AndoReverseN2 {
    pub lhs: Mat,
    pub rhs_tight: Mat,
    pub rhs_loose: Mat,
    /// `lhs <= rhs_tight`.
    pub tight_report: SlackReport,
    /// `rhs_tight <= rhs_loose`.
    pub loose_report: SlackReport,
}

/// Two-term reverse of Ando's inequality with both `r0` corrections.
///
/// `t <= 1/2`:
/// `rhs_tight = head - r0 (Phi(A # B) + Phi(B) - 2 Phi(A #_(3/4) B))
///              - r0 (Phi(A) # Phi(B) + Phi(A) - 2 Phi(A) #_(1/4) Phi(B))`;
/// `t > 1/2`:
/// `rhs_tight = head - r0 (Phi(A) # Phi(B) + Phi(B) - 2 Phi(A) #_(3/4) Phi(B))
///              - r0 (Phi(A # B) + Phi(A) - 2 Phi(A #_(1/4) B))`.
pub fn ando_reverse_bound_n2(map: &PositiveMap, a: &HpdMatrix, b: &HpdMatrix, t: f64) -> Result<AndoReverseN2> {
    check_open_weight(t)?;
    let w = WeightConstants::new(t)?;
    let pair = MappedPair::new(map, a, b)?;
    let lhs = pair.ando_gap(map, t)?;
    let rhs_loose = pair.loose_head(map, &w)?;
    let (inner, outer) = match Branch::for_weight(t) {
        Branch::Low => (
            map.apply(&pair.pencil.second_difference(0.5, 0.25))?,
            pair.mapped.second_difference(0.0, 0.25),
        ),
        Branch::High => (
            map.apply(&pair.pencil.second_difference(0.0, 0.25))?,
            pair.mapped.second_difference(0.5, 0.25),
        ),
    };
    let rhs_tight = &rhs_loose - (inner + outer).scale(w.r0);
    let dim = map.output_dim();
    let tight_report = loewner_geq_scaled(&rhs_tight, &lhs, DEFAULT_TOL, pair.reference)?
        .labeled("ando_rev_n2", "geo_t(map)-map(geo_t)", "rhs_tight")
        .at(t, dim);
    let loose_report = loewner_geq_scaled(&rhs_loose, &rhs_tight, DEFAULT_TOL, pair.reference)?
        .labeled("ando_rev_n2", "rhs_tight", "rhs_loose")
        .at(t, dim);
    Ok(AndoReverseN2 { lhs, rhs_tight, rhs_loose, tight_report, loose_report })
}

/// `diag(blocks[0], blocks[1], ...)`.
pub fn block_diagonal(blocks: &[&Mat]) -> Result<Mat> {
    let k = blocks.first().map_or(0, |m| m.nrows());
    if blocks.iter().any(|m| m.nrows() != k || m.ncols() != k) {
        return Err(Error::domain("blocks must share one square dimension"));
    }
    let mut out = Mat::zeros(k * blocks.len(), k * blocks.len());
    for (i, m) in blocks.iter().enumerate() {
        out.view_mut((i * k, i * k), (k, k)).copy_from(*m);
    }
    Ok(out)
}

/// Norm-relative positivity / linearity check of a map on one sample, used by
/// the tests and the harness self-check.
pub fn positivity_slack(map: &PositiveMap, p: &Mat) -> Result<f64> {
    let img = map.apply(p)?;
    Ok(crate::matspd::lambda_min(&img) / spectral_norm(&img).max(f64::MIN_POSITIVE))
}


#[cfg(test)]
mod endpoint_tests {
    use super::*;
    use crate::matspd::random_hpd_with;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // The series corrections are evaluated literally at t = 0 and t = 1.
    // Slack there is reported, not asserted.
    #[test]
    fn reverse_bound_at_endpoints_is_recorded() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for t in [0.0, 1.0] {
            let mut worst = f64::INFINITY;
            let mut evaluated = 0;
            for i in 0..60 {
                let kind = MapKind::ALL[i % MapKind::ALL.len()];
                let map = random_map(&mut rng, kind, 3, i % 2 == 0, Field::Complex);
                let m = map.input_dim();
                let a = random_hpd_with(&mut rng, m, 1e3, Field::Complex);
                let b = random_hpd_with(&mut rng, m, 1e3, Field::Complex);
                for n in [1, 2, 4] {
                    match ando_reverse_bound(&map, &a, &b, t, n) {
                        Ok(r) => {
                            evaluated += 1;
                            worst = worst.min(r.report.slack / r.report.scale);
                        }
                        Err(crate::Error::IllConditioned { .. }) => {}
                        Err(e) => panic!("t = {t}: {e}"),
                    }
                }
            }
            assert!(evaluated > 0);
            println!("t = {t}: {evaluated} evaluations, worst relative slack {worst:e}");
        }
    }
}
