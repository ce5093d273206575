//! Corank-one singularities: the null relation `c` among gradients, the left
//! nullvector `b` of `M`, the infinitesimal-symplectic matrix `K`, the
//! stability indicator `tau = Tr(K^2)/2`, the pair `(eta, theta)` spanning
//! `im K^2`, the transverse symplectic splitting, and Newton refinement of
//! seeds onto the zero set of `det M`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, complex_abs, corank_band, corank_from_singular_values, nullspace_basis, pinv_solve,
};
use crate::scalar::{real, Real};
use crate::symplectic::{
    apply_j, infinitesimal_symplectic_defect, symplectic_product_flat, PhasePoint, TangentVector,
};
use crate::system::IntegrableSystem;
use nalgebra::{Complex, ComplexField, DMatrix, DVector};

/// Relative scale separating degenerate from nondegenerate: a point counts
/// as degenerate when `|tau| <= TAU_REL_TOL * ||K||_F^2`.
pub const TAU_REL_TOL: f64 = 1e-8;

/// Classification of a phase-space point with respect to the singular set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularityKind {
    Regular,
    Elliptic,
    Hyperbolic,
    DegenerateCorank1,
    HigherCorank,
}

impl SingularityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SingularityKind::Regular => "regular",
            SingularityKind::Elliptic => "elliptic",
            SingularityKind::Hyperbolic => "hyperbolic",
            SingularityKind::DegenerateCorank1 => "degenerate-corank-1",
            SingularityKind::HigherCorank => "higher-corank",
        }
    }
}

/// Everything computed at a singular point. `c` is unit norm with its first
/// nonvanishing component positive; `b` is unit norm with its largest
/// component rotated to the positive real axis. Only the sign of `tau` is
/// canonical; its magnitude depends on this normalization of `c`.
#[derive(Clone, Debug)]
pub struct SingularityData<F> {
    pub point: PhasePoint<F>,
    pub corank: usize,
    pub kind: SingularityKind,
    pub c: Option<DVector<F>>,
    pub b: Option<DVector<Complex<F>>>,
    pub k: Option<DMatrix<F>>,
    pub tau: Option<F>,
    pub eta: Option<TangentVector<F>>,
    pub theta: Option<TangentVector<F>>,
}

/// Corank of `dF` at `z`, decided from the singular values of the real
/// gradient stack and cross-checked against the corank of `M(z)`. If the two
/// estimates disagree beyond the threshold hysteresis band, the point is
/// reported as numerically ambiguous.
///
/// Thresholding is relative to `max(sigma_max, hessian scale)`: the second
/// term keeps critical points that are not exactly representable (all
/// gradients uniformly tiny but nonzero) on the singular side.
pub fn corank_at<F: Real>(sys: &IntegrableSystem<F>, z: &PhasePoint<F>) -> Result<usize> {
    let rel_tol = real::<F>(linalg::RANK_REL_TOL);
    let (stack_sv, m_sv) = sys.corank_singular_values(z)?;
    let floor = gradient_scale_floor(sys, z)?;
    let from_stack = corank_from_singular_values(&stack_sv, rel_tol, floor);
    let from_m = corank_from_singular_values(&m_sv, rel_tol, floor);
    if from_stack == from_m {
        return Ok(from_stack);
    }
    let band_stack = corank_band(&stack_sv, rel_tol, floor);
    let band_m = corank_band(&m_sv, rel_tol, floor);
    let common: Vec<usize> = band_stack
        .iter()
        .copied()
        .filter(|k| band_m.contains(k))
        .collect();
    if common.contains(&from_stack) {
        Ok(from_stack)
    } else if let Some(&k) = common.first() {
        Ok(k)
    } else {
        Err(Error::CorankAmbiguous {
            grad_stack: from_stack,
            m_matrix: from_m,
        })
    }
}

/// Characteristic gradient magnitude at unit distance from `z`: the largest
/// Hessian norm times `1 + ||z||`. Tiny singular values are judged against
/// this scale as well as against `sigma_max`.
fn gradient_scale_floor<F: Real>(sys: &IntegrableSystem<F>, z: &PhasePoint<F>) -> Result<F> {
    let mut scale = F::zero();
    for f in sys.fields() {
        let h = f.hess_flat(z.coords().as_slice())?;
        let norm = h.norm();
        if norm > scale {
            scale = norm;
        }
    }
    Ok(scale * (F::one() + z.coords().norm()))
}

/// Unit-norm null relation `sum_a c_a grad F_a(y) = 0`, sign-pinned so the
/// first nonvanishing component is positive. Requires corank exactly 1.
pub fn c_vector<F: Real>(sys: &IntegrableSystem<F>, y: &PhasePoint<F>) -> Result<DVector<F>> {
    let corank = corank_at(sys, y)?;
    if corank != 1 {
        return Err(Error::NotCorankOne { found: corank });
    }
    c_vector_unchecked(sys, y)
}

/// The nullvector extraction without the corank gate (flow-transport tests
/// evaluate it at points that drift slightly off the singular set).
pub fn c_vector_unchecked<F: Real>(
    sys: &IntegrableSystem<F>,
    y: &PhasePoint<F>,
) -> Result<DVector<F>> {
    let stack = sys.gradient_stack(y)?;
    let mut c = linalg::real_left_nullvector(&stack)?;
    pin_sign(&mut c);
    Ok(c)
}

fn pin_sign<F: Real>(c: &mut DVector<F>) {
    let tiny = real::<F>(1e-12);
    for i in 0..c.len() {
        if c[i].abs() > tiny {
            if c[i] < F::zero() {
                *c = -c.clone();
            }
            return;
        }
    }
}

/// Unit-norm complex left nullvector `b` of `M(y)`, phase-rotated so its
/// largest-magnitude component is real and positive.
pub fn b_vector<F: Real>(
    sys: &IntegrableSystem<F>,
    y: &PhasePoint<F>,
) -> Result<DVector<Complex<F>>> {
    let corank = corank_at(sys, y)?;
    if corank != 1 {
        return Err(Error::NotCorankOne { found: corank });
    }
    let m = sys.m_matrix(y)?;
    // b . M = 0 means b (as a column) lies in the right nullspace of M^T.
    let mut b = linalg::complex_right_nullvector(&m.transpose())?;
    // Phase normalization.
    let mut idx = 0;
    let mut best = F::zero();
    for (i, z) in b.iter().enumerate() {
        let mag = z.norm_sqr();
        if mag > best {
            best = mag;
            idx = i;
        }
    }
    let pivot = b[idx];
    let mag = complex_abs(pivot);
    if mag > F::zero() {
        let phase = Complex::new(pivot.re / mag, -pivot.im / mag);
        for z in b.iter_mut() {
            *z *= phase;
        }
    }
    Ok(b)
}

/// `K(y) = sum_a c_a J F_a''(y)` with the pinned unit `c`.
pub fn k_matrix<F: Real>(sys: &IntegrableSystem<F>, y: &PhasePoint<F>) -> Result<DMatrix<F>> {
    let c = c_vector(sys, y)?;
    k_matrix_with_c(sys, y, &c)
}

/// `K` built from an externally supplied relation vector (used when `c` is
/// frozen at a base point and transported along a torus).
pub fn k_matrix_with_c<F: Real>(
    sys: &IntegrableSystem<F>,
    y: &PhasePoint<F>,
    c: &DVector<F>,
) -> Result<DMatrix<F>> {
    let dim = sys.dim();
    let mut k = DMatrix::zeros(dim, dim);
    for (alpha, f) in sys.fields().iter().enumerate() {
        if c[alpha] != F::zero() {
            let hess = f.hess_flat(y.coords().as_slice())?;
            k += j_times(&hess) * c[alpha];
        }
    }
    Ok(k)
}

/// `J * A` using the block action of `J`, avoiding the explicit matrix.
pub fn j_times<F: Real>(a: &DMatrix<F>) -> DMatrix<F> {
    let dim = a.nrows();
    let n = dim / 2;
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..dim {
            out[(i, j)] = a[(n + i, j)];
            out[(n + i, j)] = -a[(i, j)];
        }
    }
    out
}

/// `tau = Tr(K^2) / 2`.
pub fn tau_of<F: Real>(k: &DMatrix<F>) -> F {
    let k2 = k * k;
    k2.trace() / real::<F>(2.0)
}

/// `eta = K beta`, `theta = K J beta` with `beta = (Re b, Im b)`.
pub fn eta_theta<F: Real>(
    sys: &IntegrableSystem<F>,
    y: &PhasePoint<F>,
) -> Result<(TangentVector<F>, TangentVector<F>)> {
    let b = b_vector(sys, y)?;
    let k = k_matrix(sys, y)?;
    eta_theta_from(&k, &b)
}

pub fn eta_theta_from<F: Real>(
    k: &DMatrix<F>,
    b: &DVector<Complex<F>>,
) -> Result<(TangentVector<F>, TangentVector<F>)> {
    let beta = beta_vector(b);
    let eta = k * &beta;
    let theta = k * apply_j(&beta);
    Ok((TangentVector::from_flat(eta)?, TangentVector::from_flat(theta)?))
}

/// `beta = (Re b, Im b)` as a flat phase-space vector.
pub fn beta_vector<F: Real>(b: &DVector<Complex<F>>) -> DVector<F> {
    let n = b.len();
    let mut beta = DVector::zeros(2 * n);
    for i in 0..n {
        beta[i] = b[i].re;
        beta[n + i] = b[i].im;
    }
    beta
}

/// Classify a point: corank first, then the sign of `tau` relative to
/// `TAU_REL_TOL * ||K||_F^2`. Elliptic means `tau < 0` (linearly stable),
/// hyperbolic means `tau > 0`.
pub fn tau_and_classify<F: Real>(
    sys: &IntegrableSystem<F>,
    y: &PhasePoint<F>,
) -> Result<SingularityData<F>> {
    let corank = corank_at(sys, y)?;
    if corank == 0 {
        return Ok(SingularityData {
            point: y.clone(),
            corank,
            kind: SingularityKind::Regular,
            c: None,
            b: None,
            k: None,
            tau: None,
            eta: None,
            theta: None,
        });
    }
    if corank > 1 {
        return Ok(SingularityData {
            point: y.clone(),
            corank,
            kind: SingularityKind::HigherCorank,
            c: None,
            b: None,
            k: None,
            tau: None,
            eta: None,
            theta: None,
        });
    }
    let c = c_vector_unchecked(sys, y)?;
    let b = b_vector(sys, y)?;
    let k = k_matrix_with_c(sys, y, &c)?;
    let tau = tau_of(&k);
    let k_scale = k.norm() * k.norm();
    let tol_tau = real::<F>(TAU_REL_TOL) * k_scale;
    let kind = if tau < -tol_tau {
        SingularityKind::Elliptic
    } else if tau > tol_tau {
        SingularityKind::Hyperbolic
    } else {
        SingularityKind::DegenerateCorank1
    };
    let (eta, theta) = eta_theta_from(&k, &b)?;
    Ok(SingularityData {
        point: y.clone(),
        corank,
        kind,
        c: Some(c),
        b: Some(b),
        k: Some(k),
        tau: Some(tau),
        eta: Some(eta),
        theta: Some(theta),
    })
}

/// Transverse symplectic splitting at a nondegenerate corank-one point:
/// `im K^2 = span{eta, theta}` (dimension 2) and `ker K^2` (dimension 2n-2),
/// mutually skew-orthogonal.
pub struct TransverseSplit<F> {
    pub image: [TangentVector<F>; 2],
    pub kernel: Vec<TangentVector<F>>,
    /// Largest `|[u, v]|` between unit kernel and unit image vectors.
    pub skew_residual: F,
}

pub fn transverse_split<F: Real>(
    sys: &IntegrableSystem<F>,
    x: &PhasePoint<F>,
) -> Result<TransverseSplit<F>> {
    let data = tau_and_classify(sys, x)?;
    match data.kind {
        SingularityKind::Elliptic | SingularityKind::Hyperbolic => {}
        other => {
            return Err(Error::Invalid(format!(
                "transverse split requires an elliptic or hyperbolic point, got {}",
                other.as_str()
            )))
        }
    }
    let k = data.k.as_ref().unwrap();
    let k2 = k * k;
    let rank = k2.nrows() - nullspace_basis(&k2, real::<F>(linalg::RANK_REL_TOL)).len();
    if rank != 2 {
        return Err(Error::SplitRank { rank });
    }
    let kernel_raw = nullspace_basis(&k2, real::<F>(linalg::RANK_REL_TOL));
    let eta = data.eta.clone().unwrap();
    let theta = data.theta.clone().unwrap();

    let mut skew_residual = F::zero();
    let eta_unit = eta.coords() / eta.norm();
    let theta_unit = theta.coords() / theta.norm();
    for v in &kernel_raw {
        for im in [&eta_unit, &theta_unit] {
            let s = symplectic_product_flat(v, im).abs();
            if s > skew_residual {
                skew_residual = s;
            }
        }
    }
    Ok(TransverseSplit {
        image: [eta, theta],
        kernel: kernel_raw
            .into_iter()
            .map(|v| TangentVector::from_flat(v).unwrap())
            .collect(),
        skew_residual,
    })
}

/// Options for Newton refinement onto the zero set of `det M`.
#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Convergence: `|det M| <= tol_det * ||d det M||` (distance-to-zero scale).
    pub tol_det: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol_det: 1e-12,
            max_iter: 50,
        }
    }
}

/// Newton refinement of a seed towards the codimension-two zero set of
/// `det M`, stepping by the minimum-norm solution of the rank-2 linearized
/// system (the two real equations `Re det M = Im det M = 0`).
pub fn locate_singularity<F: Real>(
    sys: &IntegrableSystem<F>,
    seed: &PhasePoint<F>,
    opts: NewtonOptions,
) -> Result<PhasePoint<F>> {
    let dim = sys.dim();
    let mut z = seed.clone();
    let fd_step = ComplexField::powf(F::EPSILON, real::<F>(1.0 / 3.0));
    let mut last_abs = f64::INFINITY;
    for _ in 0..=opts.max_iter {
        let det = sys.det_m(&z)?;
        let det_abs = complex_abs(det);
        last_abs = det_abs.to_f64().unwrap_or(f64::NAN);

        // Central-difference Jacobian of (Re det, Im det): 2 x 2n.
        let mut jac = DMatrix::zeros(2, dim);
        for i in 0..dim {
            let h = fd_step * F::one().max(z.coords()[i].abs());
            let mut zp = z.clone();
            zp.coords_mut()[i] += h;
            let dp = sys.det_m(&zp)?;
            let mut zm = z.clone();
            zm.coords_mut()[i] -= h;
            let dm = sys.det_m(&zm)?;
            jac[(0, i)] = (dp.re - dm.re) / (h + h);
            jac[(1, i)] = (dp.im - dm.im) / (h + h);
        }
        let grad_scale = linalg::spectral_norm(&jac);
        if det_abs <= real::<F>(opts.tol_det) * grad_scale {
            let corank = corank_at(sys, &z)?;
            if corank >= 2 {
                return Err(Error::NotCorankOne { found: corank });
            }
            return Ok(z);
        }
        if grad_scale == F::zero() {
            break;
        }
        let rhs = DVector::from_column_slice(&[-det.re, -det.im]);
        let step = pinv_solve(&jac, &rhs, real::<F>(linalg::RANK_REL_TOL));
        if step.norm() < F::EPSILON * (F::one() + z.coords().norm()) {
            break;
        }
        *z.coords_mut() += step;
    }
    Err(Error::NoConvergence {
        iters: opts.max_iter,
        det_abs: last_abs,
    })
}

/// Defect of the infinitesimal-symplectic identity for a computed `K`.
pub fn k_symplectic_defect<F: Real>(k: &DMatrix<F>) -> F {
    infinitesimal_symplectic_defect(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;
    use crate::symplectic::symplectic_product;
    use crate::system::Hamiltonian;

    fn field(src: &str, n: usize) -> ScalarField<f64> {
        ScalarField::parse(src, n, &[]).unwrap()
    }

    fn bifurcation(eps: f64) -> IntegrableSystem<f64> {
        IntegrableSystem::new(
            vec![
                ScalarField::parse(
                    "p1^2/2 + p2*q1^2/2 - eps*q1",
                    2,
                    &[("eps".to_string(), eps)],
                )
                .unwrap(),
                field("p2", 2),
            ],
            Hamiltonian::FirstField,
            "bifurcation",
        )
        .unwrap()
    }

    fn harmonic() -> IntegrableSystem<f64> {
        IntegrableSystem::new(
            vec![field("(q1^2 + p1^2)/2", 1)],
            Hamiltonian::FirstField,
            "harmonic",
        )
        .unwrap()
    }

    fn point(v: &[f64]) -> PhasePoint<f64> {
        PhasePoint::from_slice(v).unwrap()
    }

    #[test]
    fn corank_values_on_bifurcation() {
        let sys = bifurcation(0.0);
        assert_eq!(corank_at(&sys, &point(&[1.0, 0.0, 0.3, 0.5])).unwrap(), 0);
        assert_eq!(corank_at(&sys, &point(&[0.0, 0.0, 0.0, -1.0])).unwrap(), 1);
        assert_eq!(corank_at(&sys, &point(&[0.0, 0.0, 0.0, 0.0])).unwrap(), 1);
    }

    #[test]
    fn c_vector_hand_values() {
        let sys = bifurcation(0.0);
        let c = c_vector(&sys, &point(&[0.0, 0.0, 0.0, -1.0])).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);

        // Product system: F1 = (p1^2 - q1^2)/2, F2 = (p2^2 + q2^2)/2 at
        // (0, 1, 0, 0): dF1 = 0, so c = (1, 0).
        let prod = IntegrableSystem::new(
            vec![field("(p1^2 - q1^2)/2", 2), field("(p2^2 + q2^2)/2", 2)],
            Hamiltonian::Weights(vec![1.0, 1.0]),
            "product",
        )
        .unwrap();
        let c = c_vector(&prod, &point(&[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);

        // Regular point refuses.
        assert!(matches!(
            c_vector(&sys, &point(&[1.0, 0.0, 0.3, 0.5])),
            Err(Error::NotCorankOne { found: 0 })
        ));
    }

    #[test]
    fn b_vector_hand_values() {
        let sys = bifurcation(0.0);
        let b = b_vector(&sys, &point(&[0.0, 0.0, 0.0, -1.0])).unwrap();
        assert!((b[0].re - 1.0).abs() < 1e-12 && b[0].im.abs() < 1e-12);
        assert!(complex_abs(b[1]) < 1e-12);

        // One freedom: b = (1) at any corank-1 point.
        let h = harmonic();
        let b = b_vector(&h, &point(&[0.0, 0.0])).unwrap();
        assert!((b[0].re - 1.0).abs() < 1e-12 && b[0].im.abs() < 1e-12);
    }

    #[test]
    fn b_residual_small_on_singular_branch() {
        // Constructed singular points of the eps = 0.1 family: p1 = 0,
        // p2 q1 = eps.
        let sys = bifurcation(0.1);
        for i in 0..100 {
            let q1 = 0.4 + 0.012 * i as f64;
            let q2 = -1.0 + 0.02 * i as f64;
            let y = point(&[q1, q2, 0.0, 0.1 / q1]);
            let b = b_vector(&sys, &y).unwrap();
            let m = sys.m_matrix(&y).unwrap();
            let residual = (m.transpose() * &b).norm();
            let scale: f64 = m.norm();
            assert!(residual <= 1e-10 * scale, "residual {residual}");
        }
    }

    #[test]
    fn k_matrix_hand_values() {
        let sys = bifurcation(0.0);
        let k = k_matrix(&sys, &point(&[0.0, 0.0, 0.0, -1.0])).unwrap();
        // Nonzero (q1, p1) block [[0, 1], [1, 0]]: entries (0,2) and (2,0).
        let mut expect = DMatrix::<f64>::zeros(4, 4);
        expect[(0, 2)] = 1.0;
        expect[(2, 0)] = 1.0;
        assert!((k - expect).norm() < 1e-12);

        // Harmonic origin: K = J.
        let h = harmonic();
        let k = k_matrix(&h, &point(&[0.0, 0.0])).unwrap();
        let j = crate::symplectic::j_matrix::<f64>(1);
        assert!((k - j).norm() < 1e-12);
    }

    #[test]
    fn k_annihilates_remaining_vector_fields() {
        let sys = bifurcation(0.0);
        let y = point(&[0.0, 0.0, 0.0, -1.0]);
        let k = k_matrix(&sys, &y).unwrap();
        let xi2 = crate::system::hamiltonian_vector_field(sys.field(1), &y).unwrap();
        assert!((&k * xi2.coords()).norm() < 1e-12);
        assert!(k_symplectic_defect(&k) < 1e-12);
        assert!(k.trace().abs() < 1e-12);
    }

    #[test]
    fn tau_classification_hand_values() {
        let sys = bifurcation(0.0);

        let hyp = tau_and_classify(&sys, &point(&[0.0, 0.0, 0.0, -1.0])).unwrap();
        assert_eq!(hyp.kind, SingularityKind::Hyperbolic);
        assert!((hyp.tau.unwrap() - 1.0).abs() < 1e-12);

        let ell = tau_and_classify(&sys, &point(&[0.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(ell.kind, SingularityKind::Elliptic);
        assert!((ell.tau.unwrap() + 1.0).abs() < 1e-12);

        let deg = tau_and_classify(&sys, &point(&[0.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(deg.kind, SingularityKind::DegenerateCorank1);

        let h = harmonic();
        let e = tau_and_classify(&h, &point(&[0.0, 0.0])).unwrap();
        assert_eq!(e.kind, SingularityKind::Elliptic);
        assert!((e.tau.unwrap() + 1.0).abs() < 1e-12);

        let reg = tau_and_classify(&sys, &point(&[1.0, 0.0, 0.3, 0.5])).unwrap();
        assert_eq!(reg.kind, SingularityKind::Regular);
    }

    #[test]
    fn eta_theta_hand_values() {
        let sys = bifurcation(0.0);
        let y = point(&[0.0, 0.0, 0.0, -1.0]);
        let (eta, theta) = eta_theta(&sys, &y).unwrap();
        assert!((eta.coords() - DVector::from_column_slice(&[0.0, 0.0, 1.0, 0.0])).norm() < 1e-12);
        assert!(
            (theta.coords() - DVector::from_column_slice(&[-1.0, 0.0, 0.0, 0.0])).norm() < 1e-12
        );
        // [eta, theta] = 1 matches sgn tau = +1.
        let s = symplectic_product(&eta, &theta).unwrap();
        assert!((s - 1.0).abs() < 1e-12);

        // Elliptic mirror: [eta, theta] < 0 matches tau < 0.
        let h = harmonic();
        let (eta, theta) = eta_theta(&h, &point(&[0.0, 0.0])).unwrap();
        let s = symplectic_product(&eta, &theta).unwrap();
        assert!(s < 0.0);
        assert!((s + 1.0).abs() < 1e-12);

        // Degenerate point: [eta, theta] ~ 0 (K^2 = 0 there).
        let d = tau_and_classify(&sys, &point(&[0.0, 0.0, 0.0, 0.0])).unwrap();
        let s = symplectic_product(d.eta.as_ref().unwrap(), d.theta.as_ref().unwrap()).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn transverse_split_hand_values() {
        let sys = bifurcation(0.0);
        let split = transverse_split(&sys, &point(&[0.0, 0.0, 0.0, -1.0])).unwrap();
        assert_eq!(split.kernel.len(), 2);
        assert!(split.skew_residual < 1e-12);
        // Image spans {e_p1, e_q1}; kernel spans {e_q2, e_p2}.
        for v in &split.kernel {
            assert!(v.q(0).abs() < 1e-12 && v.p(0).abs() < 1e-12);
        }

        // One-freedom case: kernel trivial, image is the whole plane.
        let h = harmonic();
        let split = transverse_split(&h, &point(&[0.0, 0.0])).unwrap();
        assert!(split.kernel.is_empty());
    }

    #[test]
    fn newton_refinement_on_bifurcation() {
        let sys = bifurcation(0.1);
        let refined =
            locate_singularity(&sys, &point(&[1.0, 0.0, 0.01, 0.12]), NewtonOptions::default())
                .unwrap();
        // Lands on {p1 = 0, p2 q1 = 0.1} near q1 = 1.
        assert!(refined.p(0).abs() < 1e-10);
        assert!((refined.p(1) * refined.q(0) - 0.1).abs() < 1e-10);
        assert!((refined.q(0) - 1.0).abs() < 0.1);
        assert_eq!(corank_at(&sys, &refined).unwrap(), 1);
    }

    #[test]
    fn newton_identity_on_exact_singularity() {
        let sys = bifurcation(0.0);
        let y = point(&[0.0, 0.0, 0.0, -1.0]);
        let refined = locate_singularity(&sys, &y, NewtonOptions::default()).unwrap();
        assert_eq!(refined, y);
    }

    #[test]
    fn newton_fails_far_from_zero_set() {
        // F1 = p1^2/2 + q1^2/2 + 2 has det M = p1 + i q1... still zero at the
        // origin; instead use a field whose gradient never vanishes.
        let sys = IntegrableSystem::new(
            vec![field("p1 + q1^2", 1)],
            Hamiltonian::FirstField,
            "no-singularity",
        )
        .unwrap();
        // det M = 1 + 2 q1 i never vanishes (real part is 1).
        let err = locate_singularity(&sys, &point(&[5.0, 5.0]), NewtonOptions::default());
        assert!(matches!(err, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn tau_sign_invariant_under_c_rescaling() {
        let sys = bifurcation(0.0);
        let y = point(&[0.0, 0.0, 0.0, -1.0]);
        let c = c_vector(&sys, &y).unwrap();
        for s in [0.5, 2.0, -3.0] {
            let k = k_matrix_with_c(&sys, &y, &(&c * s)).unwrap();
            assert!(tau_of(&k) > 0.0);
        }
    }
}
