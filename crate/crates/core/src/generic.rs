//! Most generic skew-symmetric structures of bounded rank and their
//! codimensions. All arithmetic here is exact integer arithmetic.

use thiserror::Error;

use crate::canon::{C64, EigStruct, Kcf, KcfBlock, Point, SkewBlock, SkewKcf};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenericError {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("repeated eigenvalue {0}")]
    RepeatedEigenvalue(String),
    #[error("H/K blocks unsupported")]
    UnsupportedBlocks,
}

/// Size `n` and half-rank `w` of a bounded-rank skew pencil space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenericPencilParams {
    pub n: usize,
    pub w: usize,
    pub alpha: usize,
    pub s: usize,
}

impl GenericPencilParams {
    pub fn new(n: usize, w: usize) -> Result<Self, GenericError> {
        if n < 2 || w < 1 || 2 * w > n - 1 {
            return Err(GenericError::OutOfRange(format!(
                "need n >= 2 and 2 <= 2w <= n-1, got n={n}, w={w}"
            )));
        }
        let free = n - 2 * w;
        Ok(GenericPencilParams { n, w, alpha: w / free, s: w % free })
    }

    /// Number of `M` blocks, `n - 2w`.
    pub fn blocks(&self) -> usize {
        self.n - 2 * self.w
    }
}

/// Size `m`, half-rank `r` and odd grade `d` of a bounded-rank skew
/// polynomial space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenericPolyParams {
    pub m: usize,
    pub r: usize,
    pub d: usize,
    pub beta: usize,
    pub t: usize,
}

impl GenericPolyParams {
    pub fn new(m: usize, r: usize, d: usize) -> Result<Self, GenericError> {
        if d.is_multiple_of(2) {
            return Err(GenericError::OutOfRange(format!("grade must be odd, got d={d}")));
        }
        if m < 2 || r < 1 || 2 * r > m - 1 {
            return Err(GenericError::OutOfRange(format!(
                "need m >= 2 and 2 <= 2r <= m-1, got m={m}, r={r}"
            )));
        }
        let free = m - 2 * r;
        Ok(GenericPolyParams { m, r, d, beta: r * d / free, t: r * d % free })
    }

    /// The minimal indices of the generic structure, descending.
    pub fn indices(&self) -> Vec<usize> {
        let free = self.m - 2 * self.r;
        let mut v = vec![self.beta + 1; self.t];
        v.extend(std::iter::repeat_n(self.beta, free - self.t));
        v
    }
}

pub fn generic_skew_pencil(p: GenericPencilParams) -> SkewKcf {
    let blocks = std::iter::repeat_n(SkewBlock::M(p.alpha + 1), p.s)
        .chain(std::iter::repeat_n(SkewBlock::M(p.alpha), p.blocks() - p.s));
    SkewKcf::new(blocks).expect("M blocks are always valid")
}

/// The generic regular structure for even `n`: one `H_1` per eigenvalue.
pub fn generic_skew_regular(n: usize, eigs: &[C64]) -> Result<SkewKcf, GenericError> {
    if !n.is_multiple_of(2) || eigs.len() != n / 2 {
        return Err(GenericError::OutOfRange(format!(
            "need even n and n/2 eigenvalues, got n={n} with {} eigenvalues",
            eigs.len()
        )));
    }
    let mut points: Vec<Point> = eigs.iter().map(|z| Point::value(z.re, z.im)).collect();
    points.sort_unstable();
    if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
        return Err(GenericError::RepeatedEigenvalue(w[0].to_string()));
    }
    Ok(SkewKcf::new(points.into_iter().map(|eig| SkewBlock::H { eig, size: 1 }))
        .expect("H_1 blocks are valid"))
}

/// The most generic `p x q` pencil, which has full rank `min(p, q)`.
pub fn generic_rect_full_rank(p: usize, q: usize) -> Result<Kcf, GenericError> {
    if p == q {
        return Err(GenericError::OutOfRange(format!("need p != q, got p=q={p}")));
    }
    let (small, large) = (p.min(q), p.max(q));
    let free = large - small;
    let (a0, s0) = (small / free, small % free);
    let indices = std::iter::repeat_n(a0 + 1, s0).chain(std::iter::repeat_n(a0, free - s0));
    let blocks: Vec<KcfBlock> = if p < q {
        indices.map(KcfBlock::L).collect()
    } else {
        indices.map(KcfBlock::LT).collect()
    };
    Ok(Kcf::new(blocks).expect("L blocks are valid"))
}

pub fn generic_skew_poly(p: GenericPolyParams) -> EigStruct {
    let idx = p.indices();
    let mut e = EigStruct { right: idx.clone(), left: idx, skew: true, ..EigStruct::default() };
    e.normalize();
    e
}

/// Orbit codimension of an `M`-only skew form: the sum over unordered block
/// pairs of `2 max(m_i, m_j) + (2 if m_i = m_j else 1)`.
pub fn codim_sum_formula(s: &SkewKcf) -> Result<usize, GenericError> {
    if !s.is_m_only() {
        return Err(GenericError::UnsupportedBlocks);
    }
    let m = s.m_indices();
    let mut total = 0;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            total += 2 * m[i].max(m[j]) + if m[i] == m[j] { 2 } else { 1 };
        }
    }
    Ok(total)
}

/// `(n - 2w - 1)(n - w)`.
pub fn codim_closed_form(n: usize, w: usize) -> Result<usize, GenericError> {
    let p = GenericPencilParams::new(n, w)?;
    Ok((p.blocks() - 1) * (n - w))
}

/// `(m - 2r - 1)(m(d + 1) - 2r) / 2`.
pub fn codim_poly(m: usize, r: usize, d: usize) -> Result<usize, GenericError> {
    GenericPolyParams::new(m, r, d)?;
    Ok((m - 2 * r - 1) * (m * (d + 1) - 2 * r) / 2)
}

/// Size and half-rank of the skew linearization of a grade-`d` polynomial
/// of size `m` and rank `2r`.
pub fn pencil_params_of_poly(m: usize, r: usize, d: usize) -> Result<GenericPencilParams, GenericError> {
    GenericPolyParams::new(m, r, d)?;
    GenericPencilParams::new(m * d, (m * (d - 1) + 2 * r) / 2)
}

/// Pencil structure of the linearization of a skew polynomial with
/// eigenstructure `e`: minimal indices shifted by `(d - 1) / 2`, divisors kept.
pub fn shifted_linearization_structure(e: &EigStruct, d: usize) -> Result<Kcf, GenericError> {
    if d.is_multiple_of(2) {
        return Err(GenericError::OutOfRange(format!("grade must be odd, got d={d}")));
    }
    let shift = (d - 1) / 2;
    let blocks = e
        .finite
        .iter()
        .map(|&(p, size)| KcfBlock::E { eig: p.into(), size })
        .chain(e.infinite.iter().map(|&size| KcfBlock::E { eig: crate::canon::Eigenvalue::Infinite, size }))
        .chain(e.right.iter().map(|&k| KcfBlock::L(k + shift)))
        .chain(e.left.iter().map(|&k| KcfBlock::LT(k + shift)));
    Kcf::new(blocks).map_err(|err| GenericError::OutOfRange(err.to_string()))
}
