//! Skew-symmetric block-tridiagonal linearization of odd-grade skew matrix
//! polynomials, and its exact inverse.
//!
//! For `P(lambda) = sum_i lambda^i A_i` of grade `d` (odd) and size `m`, the
//! pencil `lambda * A - B` has `d x d` blocks of size `m`, numbered from 1:
//!
//! * `A(i,i) = A_{d-i+1}` and `B(i,i) = -A_{d-i}` for odd `i`, zero for even `i`;
//! * `A(i,i+1) = -I`, `A(i+1,i) = I` for even `i`;
//! * `B(i,i+1) = I`, `B(i+1,i) = -I` for odd `i`.
//!
//! Every other block is zero. The pencil is skew-symmetric whenever `P` is,
//! and its minimal indices are those of `P` shifted by `(d - 1) / 2`.

use thiserror::Error;

use crate::canon::{negate, C64, CMatrix, MatPoly, Pencil};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinearizeError {
    #[error("no skew companion form for even grade {0}")]
    EvenGrade(usize),
    #[error("polynomial is not skew-symmetric")]
    NotSkew,
    #[error("polynomial must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("not in GSYL: {matrix} block ({row}, {col}) does not match the template")]
    NotInGsyl { matrix: char, row: usize, col: usize },
    #[error("not in GSYL: size {size} is not {m}*{d}")]
    WrongSize { size: usize, m: usize, d: usize },
}

/// A pencil in GSYL, the space of pencils with the linearization block
/// pattern, tagged with its block size `m` and the grade `d` it encodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GsylPencil {
    pub pencil: Pencil,
    pub m: usize,
    pub d: usize,
}

/// Expected `(A, B)` off-diagonal blocks at block position `(i, j)`, 1-based,
/// as multiples of the identity.
fn template_coupling(i: usize, j: usize) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    if j == i + 1 {
        if i.is_multiple_of(2) {
            a = -1.0;
        } else {
            b = 1.0;
        }
    } else if i == j + 1 {
        if j.is_multiple_of(2) {
            a = 1.0;
        } else {
            b = -1.0;
        }
    }
    (a, b)
}

pub fn linearize(p: &MatPoly) -> Result<GsylPencil, LinearizeError> {
    let d = p.grade();
    if d.is_multiple_of(2) {
        return Err(LinearizeError::EvenGrade(d));
    }
    if p.rows() != p.cols() {
        return Err(LinearizeError::NotSquare(p.rows(), p.cols()));
    }
    if !p.is_skew() {
        return Err(LinearizeError::NotSkew);
    }
    let m = p.rows();
    let n = m * d;
    let mut pencil = Pencil::zeros(n, n);
    let eye = CMatrix::identity(m, m);
    for i in 1..=d {
        let at = (m * (i - 1), m * (i - 1));
        if i % 2 == 1 {
            pencil.a.view_mut(at, (m, m)).copy_from(p.coeff(d - i + 1));
            pencil.b.view_mut(at, (m, m)).copy_from(&negate(p.coeff(d - i)));
        }
        for j in [i.wrapping_sub(1), i + 1] {
            if j == 0 || j > d {
                continue;
            }
            let (a, b) = template_coupling(i, j);
            let at = (m * (i - 1), m * (j - 1));
            pencil.a.view_mut(at, (m, m)).copy_from(&(&eye * C64::new(a, 0.0)));
            pencil.b.view_mut(at, (m, m)).copy_from(&(&eye * C64::new(b, 0.0)));
        }
    }
    Ok(GsylPencil { pencil, m, d })
}

/// Recovers `P` from a pencil with the exact linearization pattern.
pub fn extract(g: &GsylPencil) -> Result<MatPoly, LinearizeError> {
    let GsylPencil { pencil, m, d } = g;
    let (m, d) = (*m, *d);
    if d % 2 == 0 {
        return Err(LinearizeError::EvenGrade(d));
    }
    let n = m * d;
    if pencil.rows() != n || pencil.cols() != n {
        return Err(LinearizeError::WrongSize { size: pencil.rows().max(pencil.cols()), m, d });
    }
    let eye = CMatrix::identity(m, m);
    let zero = CMatrix::zeros(m, m);
    let block = |x: &CMatrix, i: usize, j: usize| x.view((m * (i - 1), m * (j - 1)), (m, m)).into_owned();
    let mut coeffs = vec![zero.clone(); d + 1];
    for i in 1..=d {
        for j in 1..=d {
            let (ba, bb) = (block(&pencil.a, i, j), block(&pencil.b, i, j));
            if i == j && i % 2 == 1 {
                coeffs[d - i + 1] = ba;
                coeffs[d - i] = negate(&bb);
                continue;
            }
            let (a, b) = template_coupling(i, j);
            if ba != &eye * C64::new(a, 0.0) {
                return Err(LinearizeError::NotInGsyl { matrix: 'A', row: i, col: j });
            }
            if bb != &eye * C64::new(b, 0.0) {
                return Err(LinearizeError::NotInGsyl { matrix: 'B', row: i, col: j });
            }
        }
    }
    let p = MatPoly::new(coeffs).expect("d + 1 >= 2 square coefficients");
    if !p.is_skew() {
        return Err(LinearizeError::NotSkew);
    }
    Ok(p)
}

/// Minimal indices of the linearization predicted from those of `P`.
pub fn predicted_indices(indices: &[usize], d: usize) -> Result<Vec<usize>, LinearizeError> {
    if d.is_multiple_of(2) {
        return Err(LinearizeError::EvenGrade(d));
    }
    Ok(indices.iter().map(|e| e + (d - 1) / 2).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::is_skew_matrix;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn skew(m: usize, vals: &[f64]) -> CMatrix {
        let mut x = CMatrix::zeros(m, m);
        let mut it = vals.iter().cycle();
        for i in 0..m {
            for j in i + 1..m {
                let v = c(*it.next().unwrap());
                x[(i, j)] = v;
                x[(j, i)] = -v;
            }
        }
        x
    }

    #[test]
    fn grade_one_is_the_pencil() {
        let p = MatPoly::new(vec![skew(3, &[1.0, 2.0]), skew(3, &[3.0])]).unwrap();
        let g = linearize(&p).unwrap();
        assert_eq!(g.pencil, p.as_pencil().unwrap());
    }

    #[test]
    fn grade_three_template() {
        let a3 = skew(2, &[1.0]);
        let z = CMatrix::zeros(2, 2);
        let p = MatPoly::new(vec![z.clone(), z.clone(), z, a3.clone()]).unwrap();
        let g = linearize(&p).unwrap();
        assert_eq!(g.pencil.rows(), 6);
        assert_eq!(g.pencil.a.view((0, 0), (2, 2)), a3);
        let eye = CMatrix::identity(2, 2);
        assert_eq!(g.pencil.b.view((0, 2), (2, 2)), eye);
        assert_eq!(g.pencil.b.view((2, 0), (2, 2)), -&eye);
        assert_eq!(g.pencil.a.view((2, 4), (2, 2)), -&eye);
        assert_eq!(g.pencil.a.view((4, 2), (2, 2)), eye);
        assert!(g.pencil.is_skew());
    }

    #[test]
    fn even_grade_rejected() {
        let p = MatPoly::zeros(2, 2, 2);
        assert_eq!(linearize(&p), Err(LinearizeError::EvenGrade(2)));
        assert!(predicted_indices(&[1], 4).is_err());
    }

    #[test]
    fn extraction_rejects_perturbations() {
        let p = MatPoly::new(vec![skew(3, &[1.0]), skew(3, &[2.0]), skew(3, &[3.0]), skew(3, &[4.0])])
            .unwrap();
        let g = linearize(&p).unwrap();
        let mut bad = g.clone();
        bad.pencil.a[(3, 7)] += c(1e-3);
        bad.pencil.a[(7, 3)] -= c(1e-3);
        assert_eq!(extract(&bad), Err(LinearizeError::NotInGsyl { matrix: 'A', row: 2, col: 3 }));
        let mut bad = g.clone();
        bad.d = 1;
        assert!(matches!(extract(&bad), Err(LinearizeError::WrongSize { .. })));
        // the sign-flipped coupling variant is a valid skew pencil but not the template
        let mut flipped = g;
        let eye = CMatrix::identity(3, 3);
        flipped.pencil.b.view_mut((0, 3), (3, 3)).copy_from(&(-&eye));
        flipped.pencil.b.view_mut((3, 0), (3, 3)).copy_from(&eye);
        assert!(is_skew_matrix(&flipped.pencil.b));
        assert_eq!(extract(&flipped), Err(LinearizeError::NotInGsyl { matrix: 'B', row: 1, col: 2 }));
    }

    #[test]
    fn predicted_index_examples() {
        assert_eq!(predicted_indices(&[2, 1], 3).unwrap(), [3, 2]);
        assert!(predicted_indices(&[], 7).unwrap().is_empty());
        assert_eq!(predicted_indices(&[0], 5).unwrap(), [2]);
    }

    fn skew_poly(m: usize, d: usize) -> impl Strategy<Value = MatPoly> {
        let k = m * (m - 1) / 2;
        proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), k * (d + 1)).prop_map(move |v| {
            let coeffs = (0..=d)
                .map(|i| {
                    let mut x = CMatrix::zeros(m, m);
                    let mut it = v[i * k..(i + 1) * k].iter();
                    for r in 0..m {
                        for s in r + 1..m {
                            let &(re, im) = it.next().unwrap();
                            x[(r, s)] = C64::new(re, im);
                            x[(s, r)] = -C64::new(re, im);
                        }
                    }
                    x
                })
                .collect();
            MatPoly::new(coeffs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_isometry(
            (p, q) in (2usize..5, 0usize..3).prop_flat_map(|(m, h)| (skew_poly(m, 2 * h + 1), skew_poly(m, 2 * h + 1)))
        ) {
            let (lp, lq) = (linearize(&p).unwrap(), linearize(&q).unwrap());
            prop_assert!(lp.pencil.is_skew());
            prop_assert_eq!(lp.pencil.rows(), p.rows() * p.grade());
            prop_assert_eq!(extract(&lp).unwrap(), p.clone());
            let (dl, dp) = (lp.pencil.distance(&lq.pencil), p.distance(&q));
            prop_assert!((dl - dp).abs() <= 1e-12 * (1.0 + dp));
        }
    }
}
