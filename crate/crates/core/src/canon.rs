//! Symbolic canonical forms and their dense realizations.
//!
//! Two families of canonical forms are modelled here:
//!
//! * the Kronecker canonical form of a general `m x n` pencil, a multiset of
//!   [`KcfBlock`]s (`E_k(mu)`, `E_k(inf)`, `L_k`, `L_k^T`), and
//! * the canonical form of a skew-symmetric `n x n` pencil under congruence, a
//!   multiset of [`SkewBlock`]s (`H_h(mu)`, `K_k`, `M_m`).
//!
//! Pencils are always read as `lambda * A - B`. Block templates are built from
//! the usual Jordan block `J_k(mu)`, identity `I_k` and the `k x (k+1)` shift
//! matrices `F_k = [0 I]`, `G_k = [I 0]`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanonError {
    #[error("unrealizable symbolic eigenvalue {0}")]
    SymbolicEigenvalue(Point),
    #[error("E block must have size >= 1")]
    EmptyRegularBlock,
    #[error("H and K blocks must have size >= 1")]
    EmptySkewBlock,
    #[error("shape mismatch: A is {0}x{1}, B is {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("matrix polynomial needs at least two coefficients of equal shape")]
    BadCoefficients,
    #[error("{0}")]
    Invalid(String),
}

/// A finite eigenvalue: an opaque symbolic label or a concrete complex number.
///
/// Comparison is exact. Numeric values normalise `-0.0` to `0.0` so that equal
/// values hash equally.
#[derive(Clone, Copy, Debug)]
pub enum Point {
    Symbol(u32),
    Value(C64),
}

impl Point {
    pub fn value(re: f64, im: f64) -> Self {
        // adding 0.0 maps -0.0 to +0.0
        Point::Value(C64::new(re + 0.0, im + 0.0))
    }

    pub fn as_complex(&self) -> Option<C64> {
        match self {
            Point::Symbol(_) => None,
            Point::Value(z) => Some(*z),
        }
    }

    /// Equality with an explicit tolerance on numeric values; labels compare exactly.
    pub fn approx_eq(&self, other: &Point, tol: f64) -> bool {
        match (self, other) {
            (Point::Symbol(a), Point::Symbol(b)) => a == b,
            (Point::Value(a), Point::Value(b)) => (a - b).norm() <= tol,
            _ => false,
        }
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Point::Symbol(a), Point::Symbol(b)) => a.cmp(b),
            (Point::Symbol(_), Point::Value(_)) => Ordering::Less,
            (Point::Value(_), Point::Symbol(_)) => Ordering::Greater,
            (Point::Value(a), Point::Value(b)) => {
                a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
            }
        }
    }
}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Point::Symbol(id) => {
                0u8.hash(state);
                id.hash(state);
            }
            Point::Value(z) => {
                1u8.hash(state);
                z.re.to_bits().hash(state);
                z.im.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Symbol(id) => write!(f, "mu{id}"),
            Point::Value(z) if z.im == 0.0 => write!(f, "{}", z.re),
            Point::Value(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Eigenvalue {
    Finite(Point),
    Infinite,
}

impl Eigenvalue {
    pub fn approx_eq(&self, other: &Eigenvalue, tol: f64) -> bool {
        match (self, other) {
            (Eigenvalue::Finite(a), Eigenvalue::Finite(b)) => a.approx_eq(b, tol),
            (Eigenvalue::Infinite, Eigenvalue::Infinite) => true,
            _ => false,
        }
    }
}

impl From<Point> for Eigenvalue {
    fn from(p: Point) -> Self {
        Eigenvalue::Finite(p)
    }
}

impl fmt::Display for Eigenvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eigenvalue::Finite(p) => p.fmt(f),
            Eigenvalue::Infinite => f.write_str("inf"),
        }
    }
}

/// One block of a Kronecker canonical form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KcfBlock {
    /// Jordan block `E_k(mu)` of size `k >= 1`; `mu` may be infinite.
    E { eig: Eigenvalue, size: usize },
    /// Right singular block `L_k`, `k x (k+1)`.
    L(usize),
    /// Left singular block `L_k^T`, `(k+1) x k`.
    LT(usize),
}

impl KcfBlock {
    pub fn rows(&self) -> usize {
        match *self {
            KcfBlock::E { size, .. } => size,
            KcfBlock::L(k) => k,
            KcfBlock::LT(k) => k + 1,
        }
    }

    pub fn cols(&self) -> usize {
        match *self {
            KcfBlock::E { size, .. } => size,
            KcfBlock::L(k) => k + 1,
            KcfBlock::LT(k) => k,
        }
    }

    pub fn rank(&self) -> usize {
        match *self {
            KcfBlock::E { size, .. } => size,
            KcfBlock::L(k) | KcfBlock::LT(k) => k,
        }
    }

    fn variant_rank(&self) -> u8 {
        match self {
            KcfBlock::E { .. } => 0,
            KcfBlock::L(_) => 1,
            KcfBlock::LT(_) => 2,
        }
    }

    fn size_key(&self) -> usize {
        match *self {
            KcfBlock::E { size, .. } => size,
            KcfBlock::L(k) | KcfBlock::LT(k) => k,
        }
    }
}

// Canonical order: variant, then size descending, then eigenvalue.
impl Ord for KcfBlock {
    fn cmp(&self, other: &Self) -> Ordering {
        self.variant_rank()
            .cmp(&other.variant_rank())
            .then_with(|| other.size_key().cmp(&self.size_key()))
            .then_with(|| match (self, other) {
                (KcfBlock::E { eig: a, .. }, KcfBlock::E { eig: b, .. }) => a.cmp(b),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for KcfBlock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for KcfBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KcfBlock::E { eig, size } => write!(f, "E_{size}({eig})"),
            KcfBlock::L(k) => write!(f, "L_{k}"),
            KcfBlock::LT(k) => write!(f, "LT_{k}"),
        }
    }
}

/// A Kronecker canonical form: a sorted multiset of blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Kcf {
    blocks: Vec<KcfBlock>,
}

impl Kcf {
    pub fn new(blocks: impl IntoIterator<Item = KcfBlock>) -> Result<Self, CanonError> {
        let blocks: Vec<KcfBlock> = blocks.into_iter().collect();
        if blocks
            .iter()
            .any(|b| matches!(b, KcfBlock::E { size: 0, .. }))
        {
            return Err(CanonError::EmptyRegularBlock);
        }
        Ok(Self::from_blocks_unchecked(blocks))
    }

    /// Sorts but does not validate; `E_0` blocks must already be dropped.
    pub(crate) fn from_blocks_unchecked(mut blocks: Vec<KcfBlock>) -> Self {
        blocks.sort_unstable();
        Kcf { blocks }
    }

    pub fn blocks(&self) -> &[KcfBlock] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<KcfBlock> {
        self.blocks
    }

    pub fn rows(&self) -> usize {
        self.blocks.iter().map(KcfBlock::rows).sum()
    }

    pub fn cols(&self) -> usize {
        self.blocks.iter().map(KcfBlock::cols).sum()
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(KcfBlock::rank).sum()
    }

    pub fn count(&self, block: &KcfBlock) -> usize {
        self.blocks.iter().filter(|b| *b == block).count()
    }

    pub fn right_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .blocks
            .iter()
            .filter_map(|b| match b {
                KcfBlock::L(k) => Some(*k),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v
    }

    pub fn left_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .blocks
            .iter()
            .filter_map(|b| match b {
                KcfBlock::LT(k) => Some(*k),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v
    }

    /// Distinct eigenvalues carried by `E` blocks, sorted.
    pub fn eigenvalues(&self) -> Vec<Eigenvalue> {
        let mut v: Vec<Eigenvalue> = self
            .blocks
            .iter()
            .filter_map(|b| match b {
                KcfBlock::E { eig, .. } => Some(*eig),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

impl fmt::Display for Kcf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("}")
    }
}

/// One block of the skew-symmetric canonical form under congruence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SkewBlock {
    /// `H_h(mu)`, `2h x 2h`, finite `mu`.
    H { eig: Point, size: usize },
    /// `K_k`, `2k x 2k`, the infinite-eigenvalue block.
    K(usize),
    /// `M_m`, `(2m+1) x (2m+1)`, singular block; `M_0` is the `1 x 1` zero.
    M(usize),
}

impl SkewBlock {
    pub fn dim(&self) -> usize {
        match *self {
            SkewBlock::H { size, .. } => 2 * size,
            SkewBlock::K(k) => 2 * k,
            SkewBlock::M(m) => 2 * m + 1,
        }
    }

    pub fn rank(&self) -> usize {
        match *self {
            SkewBlock::H { size, .. } => 2 * size,
            SkewBlock::K(k) => 2 * k,
            SkewBlock::M(m) => 2 * m,
        }
    }

    fn variant_rank(&self) -> u8 {
        match self {
            SkewBlock::H { .. } => 0,
            SkewBlock::K(_) => 1,
            SkewBlock::M(_) => 2,
        }
    }

    fn size_key(&self) -> usize {
        match *self {
            SkewBlock::H { size, .. } => size,
            SkewBlock::K(k) | SkewBlock::M(k) => k,
        }
    }
}

impl Ord for SkewBlock {
    fn cmp(&self, other: &Self) -> Ordering {
        self.variant_rank()
            .cmp(&other.variant_rank())
            .then_with(|| other.size_key().cmp(&self.size_key()))
            .then_with(|| match (self, other) {
                (SkewBlock::H { eig: a, .. }, SkewBlock::H { eig: b, .. }) => a.cmp(b),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for SkewBlock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SkewBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkewBlock::H { eig, size } => write!(f, "H_{size}({eig})"),
            SkewBlock::K(k) => write!(f, "K_{k}"),
            SkewBlock::M(m) => write!(f, "M_{m}"),
        }
    }
}

/// Skew-symmetric canonical form: a sorted multiset of [`SkewBlock`]s.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SkewKcf {
    blocks: Vec<SkewBlock>,
}

impl SkewKcf {
    pub fn new(blocks: impl IntoIterator<Item = SkewBlock>) -> Result<Self, CanonError> {
        let mut blocks: Vec<SkewBlock> = blocks.into_iter().collect();
        if blocks
            .iter()
            .any(|b| matches!(b, SkewBlock::H { size: 0, .. } | SkewBlock::K(0)))
        {
            return Err(CanonError::EmptySkewBlock);
        }
        blocks.sort_unstable();
        Ok(SkewKcf { blocks })
    }

    pub fn blocks(&self) -> &[SkewBlock] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(SkewBlock::dim).sum()
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(SkewBlock::rank).sum()
    }

    pub fn m_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .blocks
            .iter()
            .filter_map(|b| match b {
                SkewBlock::M(m) => Some(*m),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v
    }

    pub fn is_m_only(&self) -> bool {
        self.blocks.iter().all(|b| matches!(b, SkewBlock::M(_)))
    }

    /// The Kronecker form of any pencil with this skew canonical form.
    ///
    /// `H_h(mu) -> E_h(mu) + E_h(mu)`, `K_k -> E_k(inf) + E_k(inf)`,
    /// `M_m -> L_m + L_m^T`.
    pub fn to_kcf(&self) -> Kcf {
        let mut out = Vec::with_capacity(2 * self.blocks.len());
        for b in &self.blocks {
            match *b {
                SkewBlock::H { eig, size } => {
                    let e = KcfBlock::E { eig: Eigenvalue::Finite(eig), size };
                    out.extend([e, e]);
                }
                SkewBlock::K(k) => {
                    let e = KcfBlock::E { eig: Eigenvalue::Infinite, size: k };
                    out.extend([e, e]);
                }
                SkewBlock::M(m) => out.extend([KcfBlock::L(m), KcfBlock::LT(m)]),
            }
        }
        Kcf::from_blocks_unchecked(out)
    }

    /// Inverse of [`SkewKcf::to_kcf`] on Kronecker forms with skew pairing.
    pub fn from_kcf(kcf: &Kcf) -> Option<SkewKcf> {
        if kcf.right_indices() != kcf.left_indices() {
            return None;
        }
        let mut out: Vec<SkewBlock> = kcf.right_indices().into_iter().map(SkewBlock::M).collect();
        let mut regular: Vec<(Eigenvalue, usize)> = kcf
            .blocks()
            .iter()
            .filter_map(|b| match b {
                KcfBlock::E { eig, size } => Some((*eig, *size)),
                _ => None,
            })
            .collect();
        regular.sort_unstable();
        if !regular.len().is_multiple_of(2) {
            return None;
        }
        for pair in regular.chunks(2) {
            if pair[0] != pair[1] {
                return None;
            }
            let (eig, size) = pair[0];
            out.push(match eig {
                Eigenvalue::Finite(p) => SkewBlock::H { eig: p, size },
                Eigenvalue::Infinite => SkewBlock::K(size),
            });
        }
        out.sort_unstable();
        Some(SkewKcf { blocks: out })
    }
}

impl fmt::Display for SkewKcf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("}")
    }
}

/// Free function form of [`SkewKcf::to_kcf`].
pub fn skew_to_kcf(s: &SkewKcf) -> Kcf {
    s.to_kcf()
}

/// Complete eigenstructure: elementary divisors and minimal indices.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EigStruct {
    /// Finite elementary divisors `(mu, degree)`, sorted.
    pub finite: Vec<(Point, usize)>,
    /// Degrees of the infinite elementary divisors, sorted.
    pub infinite: Vec<usize>,
    pub right: Vec<usize>,
    pub left: Vec<usize>,
    pub skew: bool,
}

impl EigStruct {
    pub fn normalize(&mut self) {
        self.finite.sort_unstable();
        self.infinite.sort_unstable();
        self.right.sort_unstable();
        self.left.sort_unstable();
    }

    pub fn divisor_degree_sum(&self) -> usize {
        self.finite.iter().map(|(_, d)| d).sum::<usize>() + self.infinite.iter().sum::<usize>()
    }

    /// Skew pairing: equal minimal-index lists and even divisor multiplicities.
    pub fn has_skew_pairing(&self) -> bool {
        let mut right = self.right.clone();
        let mut left = self.left.clone();
        right.sort_unstable();
        left.sort_unstable();
        if right != left {
            return false;
        }
        let mut fin = self.finite.clone();
        fin.sort_unstable();
        let mut inf = self.infinite.clone();
        inf.sort_unstable();
        even_runs(&fin) && even_runs(&inf)
    }

    pub fn validate(&self) -> Result<(), CanonError> {
        if self.finite.iter().any(|(_, d)| *d == 0) || self.infinite.contains(&0) {
            return Err(CanonError::Invalid("divisor degree must be >= 1".into()));
        }
        if self.skew && !self.has_skew_pairing() {
            return Err(CanonError::Invalid(
                "skew eigenstructure needs equal left/right indices and paired divisors".into(),
            ));
        }
        Ok(())
    }
}

fn even_runs<T: PartialEq>(sorted: &[T]) -> bool {
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if (j - i) % 2 != 0 {
            return false;
        }
        i = j;
    }
    true
}

/// Reads the eigenstructure off a Kronecker form (grade 1).
pub fn eigstruct_of_kcf(kcf: &Kcf) -> EigStruct {
    let mut e = EigStruct::default();
    for b in kcf.blocks() {
        match *b {
            KcfBlock::E { eig: Eigenvalue::Finite(p), size } => e.finite.push((p, size)),
            KcfBlock::E { eig: Eigenvalue::Infinite, size } => e.infinite.push(size),
            KcfBlock::L(k) => e.right.push(k),
            KcfBlock::LT(k) => e.left.push(k),
        }
    }
    e.normalize();
    e
}

pub fn eigstruct_of_skew_kcf(s: &SkewKcf) -> EigStruct {
    let mut e = eigstruct_of_kcf(&s.to_kcf());
    e.skew = true;
    e
}

/// The grade-1 Kronecker form with the given eigenstructure.
pub fn kcf_of_eigstruct(e: &EigStruct) -> Result<Kcf, CanonError> {
    e.validate()?;
    let blocks = e
        .finite
        .iter()
        .map(|&(p, size)| KcfBlock::E { eig: Eigenvalue::Finite(p), size })
        .chain(e.infinite.iter().map(|&size| KcfBlock::E { eig: Eigenvalue::Infinite, size }))
        .chain(e.right.iter().map(|&k| KcfBlock::L(k)))
        .chain(e.left.iter().map(|&k| KcfBlock::LT(k)));
    Kcf::new(blocks)
}

/// Index-sum identity: total divisor degree plus both index sums equals `grade * rank`.
pub fn index_sum_check(e: &EigStruct, grade: usize, rank: usize) -> bool {
    let total = e.divisor_degree_sum() + e.right.iter().sum::<usize>() + e.left.iter().sum::<usize>();
    total == grade * rank
}

/// Dense pencil `lambda * A - B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pencil {
    pub a: CMatrix,
    pub b: CMatrix,
}

impl Pencil {
    pub fn new(a: CMatrix, b: CMatrix) -> Result<Self, CanonError> {
        if a.shape() != b.shape() {
            return Err(CanonError::ShapeMismatch(a.nrows(), a.ncols(), b.nrows(), b.ncols()));
        }
        Ok(Pencil { a, b })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Pencil { a: CMatrix::zeros(rows, cols), b: CMatrix::zeros(rows, cols) }
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_skew(&self) -> bool {
        is_skew_matrix(&self.a) && is_skew_matrix(&self.b)
    }

    pub fn eval(&self, lambda: C64) -> CMatrix {
        self.a.map(|x| x * lambda) - &self.b
    }

    pub fn to_poly(&self) -> MatPoly {
        MatPoly { coeffs: vec![negate(&self.b), self.a.clone()] }
    }

    /// Frobenius distance `sqrt(|A - C|^2 + |B - D|^2)`.
    pub fn distance(&self, other: &Pencil) -> f64 {
        ((&self.a - &other.a).norm_squared() + (&self.b - &other.b).norm_squared()).sqrt()
    }

    /// Block-diagonal direct sum in the given order.
    pub fn direct_sum<'a>(parts: impl IntoIterator<Item = &'a Pencil>) -> Pencil {
        let parts: Vec<&Pencil> = parts.into_iter().collect();
        let rows = parts.iter().map(|p| p.rows()).sum();
        let cols = parts.iter().map(|p| p.cols()).sum();
        let mut out = Pencil::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for p in parts {
            out.a.view_mut((r, c), (p.rows(), p.cols())).copy_from(&p.a);
            out.b.view_mut((r, c), (p.rows(), p.cols())).copy_from(&p.b);
            r += p.rows();
            c += p.cols();
        }
        out
    }
}

pub fn is_skew_matrix(m: &CMatrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| m[(i, j)] == -m[(j, i)]))
}

/// Matrix polynomial `sum_i lambda^i A_i` of declared grade `coeffs.len() - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatPoly {
    coeffs: Vec<CMatrix>,
}

impl MatPoly {
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self, CanonError> {
        if coeffs.len() < 2 || coeffs.iter().any(|c| c.shape() != coeffs[0].shape()) {
            return Err(CanonError::BadCoefficients);
        }
        Ok(MatPoly { coeffs })
    }

    pub fn zeros(rows: usize, cols: usize, grade: usize) -> Self {
        MatPoly { coeffs: vec![CMatrix::zeros(rows, cols); grade.max(1) + 1] }
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &CMatrix {
        &self.coeffs[i]
    }

    pub fn grade(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    pub fn is_skew(&self) -> bool {
        self.coeffs.iter().all(is_skew_matrix)
    }

    pub fn eval(&self, lambda: C64) -> CMatrix {
        let mut acc = self.coeffs[self.grade()].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.map(|x| x * lambda) + c;
        }
        acc
    }

    pub fn transpose(&self) -> MatPoly {
        MatPoly { coeffs: self.coeffs.iter().map(|c| c.transpose()).collect() }
    }

    pub fn distance(&self, other: &MatPoly) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// The pencil `lambda * A_1 - (-A_0)` when the grade is 1.
    pub fn as_pencil(&self) -> Option<Pencil> {
        (self.grade() == 1).then(|| Pencil { a: self.coeffs[1].clone(), b: negate(&self.coeffs[0]) })
    }
}

fn identity(k: usize) -> CMatrix {
    CMatrix::identity(k, k)
}

fn jordan(k: usize, mu: C64) -> CMatrix {
    let mut j = CMatrix::from_diagonal_element(k, k, mu);
    for i in 0..k.saturating_sub(1) {
        j[(i, i + 1)] = C64::new(1.0, 0.0);
    }
    j
}

/// `F_k = [0 I_k]`, `k x (k+1)`.
fn shift_f(k: usize) -> CMatrix {
    let mut f = CMatrix::zeros(k, k + 1);
    for i in 0..k {
        f[(i, i + 1)] = C64::new(1.0, 0.0);
    }
    f
}

/// `G_k = [I_k 0]`, `k x (k+1)`.
fn shift_g(k: usize) -> CMatrix {
    let mut g = CMatrix::zeros(k, k + 1);
    for i in 0..k {
        g[(i, i)] = C64::new(1.0, 0.0);
    }
    g
}

/// `-m` without producing negative zeros.
pub fn negate(m: &CMatrix) -> CMatrix {
    m.map(|z| C64::new(0.0 - z.re, 0.0 - z.im))
}

/// `[[0, X], [-X^T, 0]]`.
pub fn wedge(x: &CMatrix) -> CMatrix {
    let (p, q) = x.shape();
    let mut out = CMatrix::zeros(p + q, p + q);
    out.view_mut((0, p), (p, q)).copy_from(x);
    out.view_mut((p, 0), (q, p)).copy_from(&negate(&x.transpose()));
    out
}

fn numeric(p: Point) -> Result<C64, CanonError> {
    p.as_complex().ok_or(CanonError::SymbolicEigenvalue(p))
}

/// Dense realization of a single Kronecker block.
pub fn build_block(block: &KcfBlock) -> Result<Pencil, CanonError> {
    Ok(match *block {
        KcfBlock::E { size: 0, .. } => return Err(CanonError::EmptyRegularBlock),
        KcfBlock::E { eig: Eigenvalue::Finite(p), size } => {
            Pencil { a: identity(size), b: jordan(size, numeric(p)?) }
        }
        KcfBlock::E { eig: Eigenvalue::Infinite, size } => {
            Pencil { a: jordan(size, C64::new(0.0, 0.0)), b: identity(size) }
        }
        KcfBlock::L(k) => Pencil { a: shift_g(k), b: shift_f(k) },
        KcfBlock::LT(k) => Pencil { a: shift_g(k).transpose(), b: shift_f(k).transpose() },
    })
}

/// Dense realization of a single skew block; the result is exactly skew-symmetric.
pub fn build_skew_block(block: &SkewBlock) -> Result<Pencil, CanonError> {
    Ok(match *block {
        SkewBlock::H { size: 0, .. } | SkewBlock::K(0) => return Err(CanonError::EmptySkewBlock),
        SkewBlock::H { eig, size } => Pencil {
            a: wedge(&identity(size)),
            b: wedge(&jordan(size, numeric(eig)?)),
        },
        SkewBlock::K(k) => Pencil {
            a: wedge(&jordan(k, C64::new(0.0, 0.0))),
            b: wedge(&identity(k)),
        },
        SkewBlock::M(m) => Pencil { a: wedge(&shift_g(m)), b: wedge(&shift_f(m)) },
    })
}

pub fn realize_kcf(kcf: &Kcf) -> Result<Pencil, CanonError> {
    let parts = kcf.blocks().iter().map(build_block).collect::<Result<Vec<_>, _>>()?;
    Ok(Pencil::direct_sum(&parts))
}

pub fn realize_skew_kcf(s: &SkewKcf) -> Result<Pencil, CanonError> {
    let parts = s.blocks().iter().map(build_skew_block).collect::<Result<Vec<_>, _>>()?;
    Ok(Pencil::direct_sum(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn real(rows: &[&[f64]]) -> CMatrix {
        let r = rows.len();
        let cols = if r == 0 { 0 } else { rows[0].len() };
        CMatrix::from_fn(r, cols, |i, j| c(rows[i][j]))
    }

    #[test]
    fn m0_is_one_by_one_zero() {
        let p = build_skew_block(&SkewBlock::M(0)).unwrap();
        assert_eq!(p.a, real(&[&[0.0]]));
        assert_eq!(p.b, real(&[&[0.0]]));
    }

    #[test]
    fn l0_is_empty_zero_by_one() {
        let p = build_block(&KcfBlock::L(0)).unwrap();
        assert_eq!((p.rows(), p.cols()), (0, 1));
        let p = build_block(&KcfBlock::LT(0)).unwrap();
        assert_eq!((p.rows(), p.cols()), (1, 0));
    }

    #[test]
    fn h1_at_two() {
        let p = build_skew_block(&SkewBlock::H { eig: Point::value(2.0, 0.0), size: 1 }).unwrap();
        assert_eq!(p.a, real(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        assert_eq!(p.b, real(&[&[0.0, 2.0], &[-2.0, 0.0]]));
    }

    #[test]
    fn l1_template() {
        let p = build_block(&KcfBlock::L(1)).unwrap();
        // lambda [1 0] - [0 1]
        assert_eq!(p.a, real(&[&[1.0, 0.0]]));
        assert_eq!(p.b, real(&[&[0.0, 1.0]]));
    }

    #[test]
    fn infinite_block_template() {
        let p = build_block(&KcfBlock::E { eig: Eigenvalue::Infinite, size: 2 }).unwrap();
        assert_eq!(p.a, real(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert_eq!(p.b, real(&[&[1.0, 0.0], &[0.0, 1.0]]));
    }

    #[test]
    fn m1_template_is_skew() {
        let p = build_skew_block(&SkewBlock::M(1)).unwrap();
        assert!(p.is_skew());
        assert_eq!(
            p.a,
            real(&[&[0.0, 1.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])
        );
        assert_eq!(
            p.b,
            real(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]])
        );
    }

    #[test]
    fn l1_plus_lt1_is_three_by_three() {
        let kcf = Kcf::new([KcfBlock::L(1), KcfBlock::LT(1)]).unwrap();
        assert_eq!((kcf.rows(), kcf.cols(), kcf.rank()), (3, 3, 2));
        let p = realize_kcf(&kcf).unwrap();
        assert_eq!((p.rows(), p.cols()), (3, 3));
    }

    #[test]
    fn symbolic_realization_fails() {
        let s = SkewKcf::new([SkewBlock::H { eig: Point::Symbol(1), size: 1 }]).unwrap();
        assert_eq!(
            realize_skew_kcf(&s),
            Err(CanonError::SymbolicEigenvalue(Point::Symbol(1)))
        );
        assert!(build_block(&KcfBlock::E { eig: Point::Symbol(2).into(), size: 1 }).is_err());
    }

    #[test]
    fn skew_to_kcf_rules() {
        let s = SkewKcf::new([SkewBlock::M(1), SkewBlock::M(0)]).unwrap();
        let expected =
            Kcf::new([KcfBlock::L(1), KcfBlock::L(0), KcfBlock::LT(1), KcfBlock::LT(0)]).unwrap();
        assert_eq!(s.to_kcf(), expected);

        let s = SkewKcf::new([SkewBlock::K(2)]).unwrap();
        let e = KcfBlock::E { eig: Eigenvalue::Infinite, size: 2 };
        assert_eq!(s.to_kcf(), Kcf::new([e, e]).unwrap());

        let mu = Point::Symbol(1);
        let s = SkewKcf::new([SkewBlock::H { eig: mu, size: 1 }, SkewBlock::M(0), SkewBlock::M(0)])
            .unwrap();
        let e = KcfBlock::E { eig: mu.into(), size: 1 };
        let expected = Kcf::new([
            e,
            e,
            KcfBlock::L(0),
            KcfBlock::L(0),
            KcfBlock::LT(0),
            KcfBlock::LT(0),
        ])
        .unwrap();
        assert_eq!(s.to_kcf(), expected);
        assert_eq!(SkewKcf::from_kcf(&expected), Some(s));
    }

    #[test]
    fn eigstruct_examples() {
        let kcf =
            Kcf::new([KcfBlock::L(1), KcfBlock::L(0), KcfBlock::LT(1), KcfBlock::LT(0)]).unwrap();
        let e = eigstruct_of_kcf(&kcf);
        assert_eq!(e.right, vec![0, 1]);
        assert_eq!(e.left, vec![0, 1]);
        assert!(e.finite.is_empty() && e.infinite.is_empty());

        let inf = KcfBlock::E { eig: Eigenvalue::Infinite, size: 2 };
        let e = eigstruct_of_kcf(&Kcf::new([inf, inf]).unwrap());
        assert_eq!(e.infinite, vec![2, 2]);

        let e = EigStruct { right: vec![1], left: vec![1], ..Default::default() };
        assert_eq!(
            kcf_of_eigstruct(&e).unwrap(),
            Kcf::new([KcfBlock::L(1), KcfBlock::LT(1)]).unwrap()
        );
    }

    #[test]
    fn index_sum_examples() {
        let e = EigStruct { right: vec![1, 2], left: vec![1, 2], skew: true, ..Default::default() };
        assert!(index_sum_check(&e, 3, 2));

        let e = EigStruct { right: vec![0, 1], left: vec![0, 1], ..Default::default() };
        assert!(index_sum_check(&e, 1, 2));

        let e = EigStruct {
            finite: vec![(Point::value(1.0, 0.0), 1)],
            right: vec![1],
            left: vec![1],
            ..Default::default()
        };
        assert!(!index_sum_check(&e, 1, 2));
    }

    #[test]
    fn skew_eigstruct_validation() {
        let bad = EigStruct { right: vec![1], left: vec![0], skew: true, ..Default::default() };
        assert!(bad.validate().is_err());
        let odd = EigStruct {
            finite: vec![(Point::Symbol(1), 1)],
            skew: true,
            ..Default::default()
        };
        assert!(odd.validate().is_err());
    }

    #[test]
    fn block_order_is_canonical() {
        let kcf = Kcf::new([
            KcfBlock::LT(0),
            KcfBlock::L(0),
            KcfBlock::L(2),
            KcfBlock::E { eig: Eigenvalue::Infinite, size: 1 },
            KcfBlock::E { eig: Point::Symbol(1).into(), size: 1 },
        ])
        .unwrap();
        let names: Vec<String> = kcf.blocks().iter().map(ToString::to_string).collect();
        assert_eq!(names, ["E_1(mu1)", "E_1(inf)", "L_2", "L_0", "LT_0"]);
    }

    #[test]
    fn negative_zero_normalised() {
        assert_eq!(Point::value(-0.0, 0.0), Point::value(0.0, -0.0));
    }

    #[test]
    fn poly_eval_horner() {
        let a0 = real(&[&[1.0]]);
        let a1 = real(&[&[2.0]]);
        let a2 = real(&[&[3.0]]);
        let p = MatPoly::new(vec![a0, a1, a2]).unwrap();
        // 1 + 2*2 + 3*4
        assert_eq!(p.eval(c(2.0))[(0, 0)], c(17.0));
    }
}
