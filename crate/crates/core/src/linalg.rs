//! Small dense linear algebra helpers: complex determinants by pivoted LU,
//! SVD-based rank/corank decisions and nullvector extraction.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{Complex, ComplexField, DMatrix, DVector};

/// Relative singular-value threshold below which directions count as null.
pub const RANK_REL_TOL: f64 = 1e-8;

#[inline]
pub fn complex_abs<F: Real>(z: Complex<F>) -> F {
    ComplexField::sqrt(z.norm_sqr())
}

#[inline]
pub fn complex_arg<F: Real>(z: Complex<F>) -> F {
    z.im.atan2(z.re)
}

/// Determinant of a square complex matrix by LU with partial pivoting.
pub fn complex_det<F: Real>(m: &DMatrix<Complex<F>>) -> Complex<F> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    if n == 1 {
        return m[(0, 0)];
    }
    let mut a = m.clone();
    let mut det = Complex::new(F::one(), F::zero());
    for col in 0..n {
        // Pivot on the largest remaining magnitude in this column.
        let mut pivot = col;
        let mut best = a[(col, col)].norm_sqr();
        for row in col + 1..n {
            let mag = a[(row, col)].norm_sqr();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best == F::zero() {
            return Complex::new(F::zero(), F::zero());
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let diag = a[(col, col)];
        det *= diag;
        for row in col + 1..n {
            let factor = a[(row, col)] / diag;
            for k in col + 1..n {
                let sub = factor * a[(col, k)];
                a[(row, k)] -= sub;
            }
        }
    }
    det
}

/// Singular values in descending order.
pub fn singular_values<F: Real>(m: &DMatrix<F>) -> Vec<F> {
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<F> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Number of singular values at or below `rel_tol * max(sigma_max, floor)`.
/// The floor carries the problem's natural gradient scale so that a stack of
/// uniformly tiny gradients (an inexactly-represented critical point) still
/// counts as singular; a zero matrix with zero floor has full corank.
pub fn corank_from_singular_values<F: Real>(sv: &[F], rel_tol: F, floor: F) -> usize {
    let sigma_max = sv.first().copied().unwrap_or_else(F::zero).max(floor);
    if sigma_max == F::zero() {
        return sv.len();
    }
    sv.iter().filter(|&&s| s <= rel_tol * sigma_max).count()
}

/// Coranks attainable when the threshold varies over a hysteresis band
/// around `rel_tol` (factor 10 either way).
pub fn corank_band<F: Real>(sv: &[F], rel_tol: F, floor: F) -> Vec<usize> {
    let ten = F::from_f64(10.0).unwrap();
    let mut out: Vec<usize> = [rel_tol / ten, rel_tol, rel_tol * ten]
        .iter()
        .map(|&t| corank_from_singular_values(sv, t, floor))
        .collect();
    out.dedup();
    out
}

/// Unit left nullvector of a real matrix (the left singular vector for the
/// smallest singular value).
pub fn real_left_nullvector<F: Real>(m: &DMatrix<F>) -> Result<DVector<F>> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd computed with u");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .ok_or_else(|| Error::DimensionMismatch("empty matrix".into()))?;
    Ok(u.column(idx).into_owned())
}

/// Unit right nullvector of a square complex matrix (right singular vector
/// for the smallest singular value).
pub fn complex_right_nullvector<F: Real>(
    m: &DMatrix<Complex<F>>,
) -> Result<DVector<Complex<F>>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .ok_or_else(|| Error::DimensionMismatch("empty matrix".into()))?;
    // Row idx of V^H, conjugated back to a column of V.
    Ok(DVector::from_fn(m.ncols(), |j, _| v_t[(idx, j)].conj()))
}

/// Orthonormal basis of the right nullspace of a square matrix: right
/// singular vectors whose singular value falls at or below
/// `rel_tol * sigma_max`. (Square input keeps the thin SVD complete.)
pub fn nullspace_basis<F: Real>(m: &DMatrix<F>, rel_tol: F) -> Vec<DVector<F>> {
    debug_assert_eq!(m.nrows(), m.ncols());
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let sigma_max = svd
        .singular_values
        .iter()
        .cloned()
        .fold(F::zero(), |a, b| if b > a { b } else { a });
    let mut basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if sigma_max == F::zero() || s <= rel_tol * sigma_max {
            basis.push(v_t.row(i).transpose());
        }
    }
    basis
}

/// Minimum-norm least-squares solution of `A x = b` with the pseudoinverse
/// truncated at `rel_tol * sigma_max`.
pub fn pinv_solve<F: Real>(a: &DMatrix<F>, b: &DVector<F>, rel_tol: F) -> DVector<F> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sigma_max = svd
        .singular_values
        .iter()
        .cloned()
        .fold(F::zero(), |acc, s| if s > acc { s } else { acc });
    let mut x = DVector::zeros(a.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if sigma_max > F::zero() && s > rel_tol * sigma_max {
            let coeff = u.column(i).dot(b) / s;
            x += v_t.row(i).transpose() * coeff;
        }
    }
    x
}

/// Largest singular value (spectral norm); zero for a zero matrix.
pub fn spectral_norm<F: Real>(m: &DMatrix<F>) -> F {
    singular_values(m).first().copied().unwrap_or_else(F::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn det_of_hand_matrix() {
        // [[0.3 + 0.5i, 0], [0.5, 1]] has determinant 0.3 + 0.5i.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.3, 0.5), c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        let d = complex_det(&m);
        assert!((d.re - 0.3).abs() < 1e-15 && (d.im - 0.5).abs() < 1e-15);
    }

    #[test]
    fn det_needs_pivoting() {
        // Zero leading pivot forces a row swap.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let d = complex_det(&m);
        assert!((d.re + 2.0).abs() < 1e-15 && d.im.abs() < 1e-15);
    }

    #[test]
    fn det_against_diagonal_product() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 1.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, -3.0),
            ],
        );
        let d = complex_det(&m);
        // (1+i) * 2 * (-3i) = -6i(1+i) = 6 - 6i
        assert!((d.re - 6.0).abs() < 1e-14 && (d.im + 6.0).abs() < 1e-14);
    }

    #[test]
    fn corank_thresholding() {
        let m = DMatrix::<f64>::from_diagonal(&DVector::from_column_slice(&[1.0, 1e-3, 1e-12]));
        let sv = singular_values(&m);
        assert_eq!(corank_from_singular_values(&sv, 1e-8, 0.0), 1);
        let zero = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(
            corank_from_singular_values(&singular_values(&zero), 1e-8, 0.0),
            3
        );
        // A floor marks a uniformly tiny stack as fully singular.
        let tiny = [1e-17, 1e-18];
        assert_eq!(corank_from_singular_values(&tiny, 1e-8, 0.0), 0);
        assert_eq!(corank_from_singular_values(&tiny, 1e-8, 1.0), 2);
    }

    #[test]
    fn left_nullvector_of_rank_deficient_stack() {
        // Rows (1, 0, 0, 0) and (2, 0, 0, 0): left nullvector ~ (2, -1)/sqrt(5).
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        let v = real_left_nullvector(&m).unwrap();
        let residual: f64 = (m.transpose() * &v).norm();
        assert!(residual < 1e-12);
        let unit_defect: f64 = v.norm() - 1.0;
        assert!(unit_defect.abs() < 1e-12);
    }

    #[test]
    fn complex_nullvector_residual() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        // Right nullvector of m^T gives left nullvector of m.
        let v = complex_right_nullvector(&m.transpose()).unwrap();
        let lhs = m.transpose() * &v;
        assert!(lhs.iter().all(|z| complex_abs(*z) < 1e-12));
    }

    #[test]
    fn pinv_solves_rank_two_wide_system() {
        // 2 x 4 Jacobian, minimum-norm solution must satisfy A x = b.
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0]);
        let x = pinv_solve(&a, &b, 1e-12);
        assert!((&a * &x - &b).norm() < 1e-12);
    }

    #[test]
    fn nullspace_dimension() {
        // Rank-2 square matrix with a 2-dimensional kernel.
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        let basis = nullspace_basis(&m, 1e-10);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            let r: f64 = (&m * v).norm();
            assert!(r < 1e-12);
        }
    }
}
