//! Numerical recovery of normal rank, minimal indices and total divisor
//! degree from dense pencils and polynomials.
//!
//! Every rank decision is an SVD with a threshold relative to the largest
//! singular value. The ratio `sigma_k / sigma_{k+1}` across the cut is kept in
//! an audit trail; decisions with a ratio below [`LOW_CONFIDENCE_GAP`] are
//! flagged.
//!
//! Right minimal indices come from the nullities of the block convolution
//! matrices `C_k` (block `(i, j)` equal to `A_{i-j}`), whose kernels are the
//! polynomial null vectors of degree at most `k`: the nullity is
//! `sum_{eps <= k} (k + 1 - eps)`, so its first difference counts the indices
//! `<= k`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::canon::{C64, CMatrix, MatPoly, Pencil};

pub const LOW_CONFIDENCE_GAP: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("odd rank {rank} for skew input")]
    OddSkewRank { rank: usize, audit: Vec<RankDecision> },
    #[error("tolerance inconsistency: {reason}")]
    ToleranceInconsistency { reason: String, audit: Vec<RankDecision> },
    #[error("tangent codimension needs a square skew pencil")]
    NotSkew,
}

impl NumericError {
    pub fn audit(&self) -> &[RankDecision] {
        match self {
            NumericError::OddSkewRank { audit, .. }
            | NumericError::ToleranceInconsistency { audit, .. } => audit,
            NumericError::NotSkew => &[],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceModel {
    /// Threshold relative to the largest singular value.
    pub rel_tol: f64,
    pub probes: usize,
    pub seed: u64,
}

impl Default for ToleranceModel {
    fn default() -> Self {
        ToleranceModel { rel_tol: 1e-10, probes: 7, seed: 0 }
    }
}

/// One thresholded rank decision.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankDecision {
    pub context: String,
    pub rank: usize,
    pub sigma_max: f64,
    /// `sigma_rank / sigma_{rank+1}`; `None` when nothing nonzero lies below the cut.
    pub gap: Option<f64>,
    pub low_confidence: bool,
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    s
}

pub fn rank_decision(m: &CMatrix, tol: &ToleranceModel, context: impl Into<String>) -> RankDecision {
    let s = singular_values(m);
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let threshold = tol.rel_tol * sigma_max;
    let rank = if sigma_max == 0.0 { 0 } else { s.iter().take_while(|&&x| x > threshold).count() };
    let gap = match (rank.checked_sub(1).map(|i| s[i]), s.get(rank)) {
        (Some(above), Some(&below)) if below > 0.0 => Some(above / below),
        _ => None,
    };
    RankDecision {
        context: context.into(),
        rank,
        sigma_max,
        gap,
        low_confidence: gap.is_some_and(|g| g < LOW_CONFIDENCE_GAP),
    }
}

pub fn numeric_rank(m: &CMatrix, tol: &ToleranceModel) -> usize {
    rank_decision(m, tol, "matrix").rank
}

/// Probe points in the annulus `0.5 <= |lambda| <= 2`.
pub fn probe_points(tol: &ToleranceModel) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(tol.seed);
    (0..tol.probes)
        .map(|_| {
            let r: f64 = rng.random_range(0.5..=2.0);
            let t: f64 = rng.random_range(0.0..TAU);
            C64::from_polar(r, t)
        })
        .collect()
}

/// Normal rank as the maximum rank over the probe evaluations.
pub fn normal_rank(p: &MatPoly, tol: &ToleranceModel) -> Result<(usize, Vec<RankDecision>), NumericError> {
    let audit: Vec<RankDecision> = probe_points(tol)
        .par_iter()
        .map(|&z| rank_decision(&p.eval(z), tol, format!("P({:.4}{:+.4}i)", z.re, z.im)))
        .collect();
    let rank = audit.iter().map(|d| d.rank).max().unwrap_or(0);
    if p.is_skew() && rank % 2 == 1 {
        return Err(NumericError::OddSkewRank { rank, audit });
    }
    Ok((rank, audit))
}

/// `C_k`: `(d + k + 1) x (k + 1)` blocks, block `(i, j)` equal to `A_{i-j}`.
pub fn convolution_matrix(p: &MatPoly, k: usize) -> CMatrix {
    let (r, c, d) = (p.rows(), p.cols(), p.grade());
    let mut out = DMatrix::zeros((d + k + 1) * r, (k + 1) * c);
    for j in 0..=k {
        for (i, a) in p.coeffs().iter().enumerate() {
            out.view_mut(((i + j) * r, j * c), (r, c)).copy_from(a);
        }
    }
    out
}

/// Right minimal indices, ascending, given the normal rank `rho`.
pub fn right_minimal_indices(
    p: &MatPoly,
    rho: usize,
    tol: &ToleranceModel,
    audit: &mut Vec<RankDecision>,
) -> Result<Vec<usize>, NumericError> {
    let n = p.cols();
    let wanted = n.saturating_sub(rho);
    let cap = p.grade() * rho;
    let mut out = Vec::new();
    let (mut prev_nullity, mut prev_count) = (0usize, 0usize);
    let mut k = 0;
    while out.len() < wanted {
        if k > cap {
            return Err(NumericError::ToleranceInconsistency {
                reason: format!("found {} of {wanted} minimal indices below the cap {cap}", out.len()),
                audit: audit.clone(),
            });
        }
        let dec = rank_decision(&convolution_matrix(p, k), tol, format!("C_{k}"));
        let nullity = (k + 1) * n - dec.rank;
        audit.push(dec);
        let count = nullity.checked_sub(prev_nullity).filter(|&c| c >= prev_count && c <= wanted);
        let Some(count) = count else {
            return Err(NumericError::ToleranceInconsistency {
                reason: format!(
                    "nullity sequence breaks at k={k}: nullity {nullity} after {prev_nullity}, \
                     {prev_count} indices so far, {wanted} expected"
                ),
                audit: audit.clone(),
            });
        };
        out.extend(std::iter::repeat_n(k, count - prev_count));
        prev_nullity = nullity;
        prev_count = count;
        k += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveredStructure {
    pub normal_rank: usize,
    pub right: Vec<usize>,
    pub left: Vec<usize>,
    /// Total degree of the elementary divisors, `d * rho - sum(right) - sum(left)`.
    pub divisor_degree_sum: usize,
    pub audit: Vec<RankDecision>,
}

impl RecoveredStructure {
    pub fn low_confidence(&self) -> usize {
        self.audit.iter().filter(|d| d.low_confidence).count()
    }

    /// Smallest recorded gap ratio.
    pub fn min_gap(&self) -> Option<f64> {
        self.audit.iter().filter_map(|d| d.gap).min_by(f64::total_cmp)
    }
}

pub fn recover(p: &MatPoly, tol: &ToleranceModel) -> Result<RecoveredStructure, NumericError> {
    let (rho, mut audit) = normal_rank(p, tol)?;
    let right = right_minimal_indices(p, rho, tol, &mut audit)?;
    let left = right_minimal_indices(&p.transpose(), rho, tol, &mut audit)?;
    let total = p.grade() * rho;
    let used = right.iter().sum::<usize>() + left.iter().sum::<usize>();
    let inconsistent = |reason: String, audit: Vec<RankDecision>| {
        Err(NumericError::ToleranceInconsistency { reason, audit })
    };
    if used > total {
        return inconsistent(format!("index sum {used} exceeds grade * rank = {total}"), audit);
    }
    let delta = total - used;
    if p.is_skew() {
        if right != left {
            return inconsistent(format!("skew input with right {right:?} != left {left:?}"), audit);
        }
        if delta % 2 == 1 {
            return inconsistent(format!("skew input with odd divisor degree {delta}"), audit);
        }
    }
    Ok(RecoveredStructure { normal_rank: rho, right, left, divisor_degree_sum: delta, audit })
}

/// Codimension of the congruence orbit of a skew pencil, from the rank of the
/// tangent map `X -> (X^T A + A X, X^T B + B X)` onto pairs of skew matrices.
pub fn tangent_codim(p: &Pencil, tol: &ToleranceModel) -> Result<usize, NumericError> {
    if !p.is_skew() {
        return Err(NumericError::NotSkew);
    }
    let n = p.rows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let half = pairs.len();
    let mut map = CMatrix::zeros(2 * half, n * n);
    for (which, m) in [&p.a, &p.b].into_iter().enumerate() {
        for (row, &(i, j)) in pairs.iter().enumerate() {
            // (X^T M + M X)_{ij} with X = e_p e_q^T is [i = q] M_{pj} + M_{ip} [j = q]
            for pp in 0..n {
                map[(which * half + row, pp * n + i)] += m[(pp, j)];
                map[(which * half + row, pp * n + j)] += m[(i, pp)];
            }
        }
    }
    Ok(2 * half - numeric_rank(&map, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{build_block, build_skew_block, realize_skew_kcf, KcfBlock, SkewBlock, SkewKcf, Point};
    use crate::generic::{generic_skew_pencil, GenericPencilParams};

    fn tol() -> ToleranceModel {
        ToleranceModel::default()
    }

    fn generic(n: usize, w: usize) -> Pencil {
        realize_skew_kcf(&generic_skew_pencil(GenericPencilParams::new(n, w).unwrap())).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numeric_rank(&CMatrix::zeros(3, 4), &tol()), 0);
        assert_eq!(numeric_rank(&CMatrix::identity(5, 5), &tol()), 5);
        let m2 = build_skew_block(&SkewBlock::M(2)).unwrap();
        assert_eq!(numeric_rank(&m2.eval(C64::new(1.0, 0.0)), &tol()), 4);
        let d = rank_decision(&CMatrix::identity(2, 2), &tol(), "I");
        assert_eq!(d.gap, None);
        assert!(!d.low_confidence);
    }

    #[test]
    fn normal_rank_examples() {
        let (r, _) = normal_rank(&generic(6, 2).to_poly(), &tol()).unwrap();
        assert_eq!(r, 4);
        let (r, _) = normal_rank(&MatPoly::zeros(3, 3, 2), &tol()).unwrap();
        assert_eq!(r, 0);
    }

    #[test]
    fn l1_indices() {
        let p = build_block(&KcfBlock::L(1)).unwrap().to_poly();
        let rec = recover(&p, &tol()).unwrap();
        assert_eq!(rec.normal_rank, 1);
        assert_eq!(rec.right, [1]);
        assert!(rec.left.is_empty());
        assert_eq!(rec.divisor_degree_sum, 0);
    }

    #[test]
    fn generic_pencil_indices() {
        let rec = recover(&generic(10, 3).to_poly(), &tol()).unwrap();
        assert_eq!(rec.right, [0, 1, 1, 1]);
        assert_eq!(rec.left, [0, 1, 1, 1]);
        let rec = recover(&generic(4, 1).to_poly(), &tol()).unwrap();
        assert_eq!((rec.normal_rank, rec.divisor_degree_sum), (2, 0));
        assert_eq!(rec.right, [0, 1]);
    }

    #[test]
    fn divisors_show_up_in_delta() {
        let s = SkewKcf::new([
            SkewBlock::H { eig: Point::value(2.0, 0.0), size: 1 },
            SkewBlock::M(0),
            SkewBlock::M(0),
        ])
        .unwrap();
        let rec = recover(&realize_skew_kcf(&s).unwrap().to_poly(), &tol()).unwrap();
        assert_eq!(rec.normal_rank, 2);
        assert_eq!(rec.right, [0, 0]);
        assert_eq!(rec.divisor_degree_sum, 2);
    }

    #[test]
    fn zero_pencil() {
        let rec = recover(&MatPoly::zeros(3, 3, 1), &tol()).unwrap();
        assert_eq!(rec.normal_rank, 0);
        assert_eq!(rec.right, [0, 0, 0]);
        assert_eq!(rec.divisor_degree_sum, 0);
    }

    #[test]
    fn tangent_examples() {
        assert_eq!(tangent_codim(&generic(6, 2), &tol()).unwrap(), 4);
        assert_eq!(tangent_codim(&generic(5, 2), &tol()).unwrap(), 0);
        assert_eq!(tangent_codim(&generic(10, 3), &tol()).unwrap(), 21);
    }

    #[test]
    fn convolution_shape() {
        let p = MatPoly::zeros(2, 3, 3);
        let c = convolution_matrix(&p, 2);
        assert_eq!(c.shape(), (12, 9));
    }

    #[test]
    fn probes_are_deterministic_and_in_annulus() {
        let a = probe_points(&tol());
        assert_eq!(a, probe_points(&tol()));
        assert!(a.iter().all(|z| (0.5..=2.0).contains(&z.norm())));
    }

    #[test]
    fn loose_tolerance_is_reported() {
        // a tolerance so loose that the identity part of every evaluation vanishes
        let p = generic(5, 2).to_poly();
        let bad = ToleranceModel { rel_tol: 0.99, ..tol() };
        match recover(&p, &bad) {
            Ok(rec) => assert_ne!(rec.right, [2]),
            Err(e) => assert!(!e.audit().is_empty()),
        }
    }
}
