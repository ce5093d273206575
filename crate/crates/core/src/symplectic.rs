//! Phase-space vectors and the standard symplectic structure on `R^{2n}`.
//!
//! Coordinates are ordered `(q_1..q_n, p_1..p_n)` throughout, and `J` acts as
//! `(a_q, a_p) -> (a_p, -a_q)`. Storage is dense everywhere; `n` is small.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};

/// A point `z = (q, p)` of phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<F>(DVector<F>);

/// A vector of `T_z R^{2n}`, identified with `R^{2n}` itself.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector<F>(DVector<F>);

macro_rules! coords_impl {
    ($t:ident) => {
        impl<F: Real> $t<F> {
            /// Build from position and momentum slices of equal length.
            pub fn new(q: &[F], p: &[F]) -> Result<Self> {
                if q.is_empty() || q.len() != p.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "q has length {}, p has length {}",
                        q.len(),
                        p.len()
                    )));
                }
                let mut v = DVector::zeros(2 * q.len());
                for (i, &x) in q.iter().enumerate() {
                    v[i] = x;
                }
                for (i, &x) in p.iter().enumerate() {
                    v[q.len() + i] = x;
                }
                Ok(Self(v))
            }

            /// Build from a flat `(q_1..q_n, p_1..p_n)` coordinate vector.
            pub fn from_flat(v: DVector<F>) -> Result<Self> {
                if v.len() < 2 || v.len() % 2 != 0 {
                    return Err(Error::DimensionMismatch(format!(
                        "flat coordinate vector has odd or empty length {}",
                        v.len()
                    )));
                }
                Ok(Self(v))
            }

            pub fn from_slice(v: &[F]) -> Result<Self> {
                Self::from_flat(DVector::from_column_slice(v))
            }

            pub fn zeros(n: usize) -> Self {
                Self(DVector::zeros(2 * n))
            }

            /// Number of freedoms `n`.
            #[inline]
            pub fn n(&self) -> usize {
                self.0.len() / 2
            }

            /// Ambient dimension `2n`.
            #[inline]
            pub fn dim(&self) -> usize {
                self.0.len()
            }

            #[inline]
            pub fn q(&self, i: usize) -> F {
                self.0[i]
            }

            #[inline]
            pub fn p(&self, i: usize) -> F {
                self.0[self.n() + i]
            }

            #[inline]
            pub fn coords(&self) -> &DVector<F> {
                &self.0
            }

            #[inline]
            pub fn coords_mut(&mut self) -> &mut DVector<F> {
                &mut self.0
            }

            pub fn into_coords(self) -> DVector<F> {
                self.0
            }

            pub fn all_finite(&self) -> bool {
                self.0.iter().all(|x| x.finite())
            }
        }
    };
}

coords_impl!(PhasePoint);
coords_impl!(TangentVector);

impl<F: Real> PhasePoint<F> {
    pub fn to_tangent(&self) -> TangentVector<F> {
        TangentVector(self.0.clone())
    }
}

impl<F: Real> TangentVector<F> {
    pub fn norm(&self) -> F {
        self.0.norm()
    }
}

/// The matrix of `J` on `R^{2n}`: `[[0, I], [-I, 0]]`.
pub fn j_matrix<F: Real>(n: usize) -> DMatrix<F> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = F::one();
        j[(n + i, i)] = -F::one();
    }
    j
}

/// Apply `J` to a flat coordinate vector: `(a_q, a_p) -> (a_p, -a_q)`.
pub fn apply_j<F: Real>(v: &DVector<F>) -> DVector<F> {
    let n = v.len() / 2;
    let mut out = DVector::zeros(v.len());
    for i in 0..n {
        out[i] = v[n + i];
        out[n + i] = -v[i];
    }
    out
}

/// Symplectic inner product `[u, v] = q_u . p_v - p_u . q_v` on flat vectors.
pub fn symplectic_product_flat<F: Real>(u: &DVector<F>, v: &DVector<F>) -> F {
    debug_assert_eq!(u.len(), v.len());
    let n = u.len() / 2;
    let mut acc = F::zero();
    for i in 0..n {
        acc += u[i] * v[n + i] - u[n + i] * v[i];
    }
    acc
}

/// Symplectic inner product of two tangent vectors.
pub fn symplectic_product<F: Real>(u: &TangentVector<F>, v: &TangentVector<F>) -> Result<F> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "symplectic product of vectors with dimensions {} and {}",
            u.dim(),
            v.dim()
        )));
    }
    Ok(symplectic_product_flat(u.coords(), v.coords()))
}

/// True iff `[K u, v] + [u, K v] = 0` holds on all canonical basis pairs to
/// within `tol`.
pub fn check_infinitesimal_symplectic<F: Real>(k: &DMatrix<F>, tol: F) -> Result<bool> {
    let dim = k.nrows();
    if k.ncols() != dim || !dim.is_multiple_of(2) || dim == 0 {
        return Err(Error::DimensionMismatch(format!(
            "expected a 2n x 2n matrix, got {} x {}",
            k.nrows(),
            k.ncols()
        )));
    }
    Ok(infinitesimal_symplectic_defect(k) <= tol)
}

/// Max over canonical basis pairs of `|[K e_i, e_j] + [e_i, K e_j]|`.
pub fn infinitesimal_symplectic_defect<F: Real>(k: &DMatrix<F>) -> F {
    let dim = k.nrows();
    let n = dim / 2;
    // [K e_i, e_j] reads column i of K against basis vector e_j; expanding
    // the bilinear form gives closed-form index access.
    let bracket_col_basis = |col: usize, j: usize| -> F {
        if j < n {
            // e_j has q-part only: [w, e_j] = -w_p[j]
            -k[(n + j, col)]
        } else {
            // e_j has p-part only: [w, e_j] = w_q[j - n]
            k[(j - n, col)]
        }
    };
    let mut worst = F::zero();
    for i in 0..dim {
        for j in 0..dim {
            let a = bracket_col_basis(i, j);
            // [e_i, K e_j] = -[K e_j, e_i]
            let b = -bracket_col_basis(j, i);
            let defect = (a + b).abs();
            if defect > worst {
                worst = defect;
            }
        }
    }
    worst
}
