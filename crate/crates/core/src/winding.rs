//! Maslov indices of closed curves in the regular set.
//!
//! The index is computed as the winding of `arg det M` along the curve:
//! `mu(C) = (arg det M(z(1)) - arg det M(z(0))) / pi` with the argument
//! continued along adaptively refined samples. The continuation accepts a
//! step only when the principal phase difference is below `pi/2`, bisecting
//! the parameter interval otherwise; this is the ground truth against which
//! the singularity-sum formula is cross-checked.

use crate::error::{Error, Result};
use crate::linalg::complex_abs;
use crate::scalar::{real, Real};
use crate::singularity::{tau_and_classify, SingularityData, SingularityKind};
use crate::symplectic::{symplectic_product, PhasePoint, TangentVector};
use crate::system::IntegrableSystem;
use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use std::sync::Arc;

/// Default initial sampling of a curve.
pub const INITIAL_SAMPLES: usize = 256;
/// Bisection depth limit per initial interval.
pub const MAX_REFINEMENT_DEPTH: usize = 16;
/// Curve samples with `|det M|` below this times the running median are
/// treated as hits of the singular set.
pub const SINGULAR_PROXIMITY_FACTOR: f64 = 1e-12;
/// Largest allowed gap between the raw phase increment over `pi` and the
/// rounded integer index.
pub const RESIDUAL_TOL: f64 = 0.01;
/// Relative closure tolerance `||z(1) - z(0)|| <= tol * scale`.
pub const CLOSURE_TOL: f64 = 1e-10;

type CurveFn<F> = Arc<dyn Fn(F) -> PhasePoint<F> + Send + Sync>;

enum CurveParam<F> {
    Callback(CurveFn<F>),
    /// Closed polygon through the listed points (last wraps to first).
    Samples(Vec<PhasePoint<F>>),
}

impl<F: Real> Clone for CurveParam<F> {
    fn clone(&self) -> Self {
        match self {
            CurveParam::Callback(f) => CurveParam::Callback(f.clone()),
            CurveParam::Samples(s) => CurveParam::Samples(s.clone()),
        }
    }
}

/// An oriented closed curve `z(s)`, `s in [0, 1]`, `z(1) = z(0)`.
pub struct ClosedCurve<F> {
    param: CurveParam<F>,
    initial_samples: usize,
}

impl<F: Real> Clone for ClosedCurve<F> {
    fn clone(&self) -> Self {
        ClosedCurve {
            param: self.param.clone(),
            initial_samples: self.initial_samples,
        }
    }
}

impl<F: Real> ClosedCurve<F> {
    pub fn from_fn(f: impl Fn(F) -> PhasePoint<F> + Send + Sync + 'static) -> Self {
        ClosedCurve {
            param: CurveParam::Callback(Arc::new(f)),
            initial_samples: INITIAL_SAMPLES,
        }
    }

    /// Closed polygon through the given points; `z(1)` wraps back to the
    /// first point, so closure is exact by construction. A duplicated final
    /// point is dropped.
    pub fn from_samples(mut samples: Vec<PhasePoint<F>>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Invalid(
                "a closed sample curve needs at least 3 points".into(),
            ));
        }
        let first = samples.first().unwrap().clone();
        let last = samples.last().unwrap();
        let scale = F::one().max(first.coords().amax());
        if (last.coords() - first.coords()).norm() <= real::<F>(CLOSURE_TOL) * scale {
            samples.pop();
        }
        Ok(ClosedCurve {
            param: CurveParam::Samples(samples),
            initial_samples: INITIAL_SAMPLES,
        })
    }

    pub fn with_initial_samples(mut self, count: usize) -> Self {
        self.initial_samples = count.max(8);
        self
    }

    /// The circle `z(s) = center + r (cos 2 pi s) u + r (sin 2 pi s) v`.
    pub fn circle(
        center: PhasePoint<F>,
        u: TangentVector<F>,
        v: TangentVector<F>,
        radius: F,
    ) -> Result<Self> {
        if center.dim() != u.dim() || center.dim() != v.dim() {
            return Err(Error::DimensionMismatch(
                "circle center and tangents must share a dimension".into(),
            ));
        }
        let two_pi = F::two_pi();
        Ok(ClosedCurve::from_fn(move |s: F| {
            let angle = two_pi * s;
            let coords = center.coords()
                + u.coords() * (radius * ComplexField::cos(angle))
                + v.coords() * (radius * ComplexField::sin(angle));
            PhasePoint::from_flat(coords).expect("dimensions checked at construction")
        }))
    }

    pub fn initial_samples(&self) -> usize {
        match &self.param {
            CurveParam::Callback(_) => self.initial_samples,
            CurveParam::Samples(s) => s.len(),
        }
    }

    /// Point at parameter `s in [0, 1]`.
    pub fn at(&self, s: F) -> PhasePoint<F> {
        match &self.param {
            CurveParam::Callback(f) => f(s),
            CurveParam::Samples(pts) => {
                let len = pts.len();
                let t = s * real::<F>(len as f64);
                let idx = ComplexField::floor(t)
                    .to_f64()
                    .map(|x| x as usize)
                    .unwrap_or(0)
                    .min(len);
                let frac = t - real::<F>(idx as f64);
                let a = &pts[idx % len];
                let b = &pts[(idx + 1) % len];
                let coords = a.coords() * (F::one() - frac) + b.coords() * frac;
                PhasePoint::from_flat(coords).expect("samples share a dimension")
            }
        }
    }
}

/// Result of a winding computation. `index` is always even on success.
#[derive(Clone, Debug)]
pub struct MaslovResult<F> {
    pub index: i64,
    /// `Delta arg / pi` before rounding.
    pub raw: F,
    pub residual: F,
    /// `(s, unwrapped arg det M)` along the final sample set.
    pub trace: Vec<(F, F)>,
    /// `(s, det M)` along the final sample set.
    pub det_trace: Vec<(F, Complex<F>)>,
    pub refinement_depth: usize,
}

#[derive(Clone)]
struct PhaseSample<F> {
    s: F,
    det: Complex<F>,
    /// Principal argument in (-pi, pi].
    arg: F,
}

struct Unwrapper<'a, F: Real> {
    sys: &'a IntegrableSystem<F>,
    curve: &'a ClosedCurve<F>,
    det_magnitudes: Vec<F>,
    max_depth_used: usize,
}

impl<'a, F: Real> Unwrapper<'a, F> {
    fn new(sys: &'a IntegrableSystem<F>, curve: &'a ClosedCurve<F>) -> Self {
        Unwrapper {
            sys,
            curve,
            det_magnitudes: Vec::new(),
            max_depth_used: 0,
        }
    }

    /// Running median of the `|det M|` values seen so far.
    fn median_magnitude(&self) -> F {
        let mut mags = self.det_magnitudes.clone();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if mags.is_empty() {
            F::zero()
        } else {
            mags[mags.len() / 2]
        }
    }

    fn sample(&mut self, s: F) -> Result<PhaseSample<F>> {
        let z = self.curve.at(s);
        let det = self.sys.det_m(&z)?;
        let abs = complex_abs(det);
        self.det_magnitudes.push(abs);
        let threshold = real::<F>(SINGULAR_PROXIMITY_FACTOR) * self.median_magnitude();
        if abs <= threshold || abs == F::zero() {
            return Err(Error::CurveHitsSingularSet {
                s: s.to_f64().unwrap_or(f64::NAN),
                det_abs: abs.to_f64().unwrap_or(f64::NAN),
                threshold: threshold.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(PhaseSample {
            s,
            det,
            arg: det.im.atan2(det.re),
        })
    }

    /// Phase increment from `left` to `right`, bisecting while the principal
    /// step is `pi/2` or more. Accepted samples are appended to `out`.
    fn advance(
        &mut self,
        left: &PhaseSample<F>,
        right: PhaseSample<F>,
        depth: usize,
        out: &mut Vec<PhaseSample<F>>,
    ) -> Result<F> {
        let step = principal_delta(left.arg, right.arg);
        if step.abs() < F::frac_pi_2() {
            out.push(right);
            if depth > self.max_depth_used {
                self.max_depth_used = depth;
            }
            return Ok(step);
        }
        if depth >= MAX_REFINEMENT_DEPTH {
            return Err(Error::PhaseUnresolvable {
                s: right.s.to_f64().unwrap_or(f64::NAN),
                depth,
            });
        }
        let mid_s = (left.s + right.s) / real::<F>(2.0);
        let mid = self.sample(mid_s)?;
        let a = self.advance(left, mid, depth + 1, out)?;
        let latest = out.last().cloned().expect("advance pushed a sample");
        let b = self.advance(&latest, right, depth + 1, out)?;
        Ok(a + b)
    }
}

/// Wrap `b - a` into the principal interval (-pi, pi].
fn principal_delta<F: Real>(a: F, b: F) -> F {
    let mut d = b - a;
    let two_pi = F::two_pi();
    while d > F::pi() {
        d -= two_pi;
    }
    while d <= -F::pi() {
        d += two_pi;
    }
    d
}

/// Continued unwrapped phase increment of `arg det M` over the parameter
/// range `[s0, s1]` of the curve, together with the accepted samples.
fn unwrap_range<F: Real>(
    sys: &IntegrableSystem<F>,
    curve: &ClosedCurve<F>,
    s0: F,
    s1: F,
    initial: usize,
) -> Result<(F, Vec<PhaseSample<F>>, usize)> {
    let mut uw = Unwrapper::new(sys, curve);
    let count = initial.max(8);
    let mut grid = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let frac = real::<F>(i as f64 / count as f64);
        grid.push(uw.sample(s0 + (s1 - s0) * frac)?);
    }
    let mut out: Vec<PhaseSample<F>> = vec![grid[0].clone()];
    let mut total = F::zero();
    for window in grid.windows(2) {
        let latest = out.last().cloned().expect("out is seeded");
        // The accepted chain ends at the same point as window[0]; continue
        // from it so unwrapping stays sequential in parameter order.
        debug_assert_eq!(
            latest.s.to_f64().unwrap().to_bits(),
            window[0].s.to_f64().unwrap().to_bits()
        );
        total += uw.advance(&latest, window[1].clone(), 0, &mut out)?;
    }
    Ok((total, out, uw.max_depth_used))
}

/// Phase increment of `arg det M` over a parameter sub-range. Splitting a
/// curve at any parameter and summing the two increments reproduces the
/// full winding.
pub fn phase_increment<F: Real>(
    sys: &IntegrableSystem<F>,
    curve: &ClosedCurve<F>,
    s0: F,
    s1: F,
) -> Result<F> {
    let span = (s1 - s0).abs().to_f64().unwrap_or(1.0);
    let initial = ((curve.initial_samples() as f64 * span).ceil() as usize).max(8);
    Ok(unwrap_range(sys, curve, s0, s1, initial)?.0)
}

/// Maslov index of a closed curve in the regular set.
pub fn maslov_index<F: Real>(
    sys: &IntegrableSystem<F>,
    curve: &ClosedCurve<F>,
) -> Result<MaslovResult<F>> {
    // Closure invariant.
    let z0 = curve.at(F::zero());
    let z1 = curve.at(F::one());
    let scale = F::one().max(z0.coords().amax());
    let gap = (z1.coords() - z0.coords()).norm();
    if gap > real::<F>(CLOSURE_TOL) * scale {
        return Err(Error::CurveNotClosed {
            gap: gap.to_f64().unwrap_or(f64::NAN),
            tol: (real::<F>(CLOSURE_TOL) * scale).to_f64().unwrap_or(f64::NAN),
        });
    }

    let (total, samples, depth) =
        unwrap_range(sys, curve, F::zero(), F::one(), curve.initial_samples())?;
    let raw = total / F::pi();
    let rounded = ComplexField::round(raw);
    let index = rounded.to_f64().unwrap_or(f64::NAN) as i64;
    let residual = (raw - rounded).abs();
    if residual > real::<F>(RESIDUAL_TOL) || index % 2 != 0 {
        return Err(Error::WindingInconsistent {
            raw: raw.to_f64().unwrap_or(f64::NAN),
            rounded: index,
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }

    let mut trace = Vec::with_capacity(samples.len());
    let mut det_trace = Vec::with_capacity(samples.len());
    let mut unwrapped = samples[0].arg;
    let mut prev_arg = samples[0].arg;
    for (i, smp) in samples.iter().enumerate() {
        if i > 0 {
            unwrapped += principal_delta(prev_arg, smp.arg);
            prev_arg = smp.arg;
        }
        trace.push((smp.s, unwrapped));
        det_trace.push((smp.s, smp.det));
    }
    Ok(MaslovResult {
        index,
        raw,
        residual,
        trace,
        det_trace,
        refinement_depth: depth,
    })
}

/// Projection of `v` onto `im K^2 = span{eta, theta}` along `ker K^2`,
/// expressed in the `(eta, theta, kernel basis)` frame.
fn project_onto_image<F: Real>(
    frame: &DMatrix<F>,
    eta: &DVector<F>,
    theta: &DVector<F>,
    v: &TangentVector<F>,
) -> Result<DVector<F>> {
    let lu = frame.clone().lu();
    let coeffs = lu.solve(v.coords()).ok_or_else(|| Error::Invalid(
        "transverse frame is singular; point is too close to degenerate".into(),
    ))?;
    Ok(eta * coeffs[0] + theta * coeffs[1])
}

fn build_frame<F: Real>(sys: &IntegrableSystem<F>, data: &SingularityData<F>) -> Result<DMatrix<F>> {
    let split = crate::singularity::transverse_split(sys, &data.point)?;
    let dim = data.point.dim();
    let mut frame = DMatrix::zeros(dim, dim);
    frame.column_mut(0).copy_from(split.image[0].coords());
    frame.column_mut(1).copy_from(split.image[1].coords());
    for (i, k) in split.kernel.iter().enumerate() {
        frame.column_mut(2 + i).copy_from(k.coords());
    }
    Ok(frame)
}

/// Local Maslov index `2 sgn[u*, v*] sgn tau(x)` of a small positively
/// parameterised loop `x + eps(cos u + sin v)` around a nondegenerate
/// corank-one point.
pub fn local_maslov_index<F: Real>(
    sys: &IntegrableSystem<F>,
    x: &PhasePoint<F>,
    u: &TangentVector<F>,
    v: &TangentVector<F>,
) -> Result<i64> {
    let data = tau_and_classify(sys, x)?;
    local_index_from_data(sys, &data, u, v)
}

fn local_index_from_data<F: Real>(
    sys: &IntegrableSystem<F>,
    data: &SingularityData<F>,
    u: &TangentVector<F>,
    v: &TangentVector<F>,
) -> Result<i64> {
    let tau = match data.kind {
        SingularityKind::Elliptic => -1i64,
        SingularityKind::Hyperbolic => 1i64,
        SingularityKind::DegenerateCorank1 => {
            return Err(Error::DegenerateSingularity {
                tau: data.tau.and_then(|t| t.to_f64()).unwrap_or(0.0),
                tol: 0.0,
            })
        }
        other => {
            return Err(Error::Invalid(format!(
                "local index needs a nondegenerate corank-one point, got {}",
                other.as_str()
            )))
        }
    };
    let frame = build_frame(sys, data)?;
    let eta = data.eta.as_ref().unwrap().coords();
    let theta = data.theta.as_ref().unwrap().coords();
    let u_star = project_onto_image(&frame, eta, theta, u)?;
    let v_star = project_onto_image(&frame, eta, theta, v)?;
    let product = crate::symplectic::symplectic_product_flat(&u_star, &v_star);
    let scale = u_star.norm() * v_star.norm();
    if product.abs() <= real::<F>(1e-9) * F::one().max(scale) {
        return Err(Error::DegenerateProjection {
            product: product.to_f64().unwrap_or(0.0),
        });
    }
    let sigma = if product > F::zero() { 1i64 } else { -1i64 };
    Ok(2 * sigma * tau)
}

/// Local index together with its winding-oracle verification on the
/// `eps`-circle `x + eps(cos 2 pi s u + sin 2 pi s v)`. Errors if the two
/// routes disagree.
pub fn local_maslov_index_verified<F: Real>(
    sys: &IntegrableSystem<F>,
    x: &PhasePoint<F>,
    u: &TangentVector<F>,
    v: &TangentVector<F>,
    eps: F,
) -> Result<(i64, MaslovResult<F>)> {
    let formula = local_maslov_index(sys, x, u, v)?;
    let curve = ClosedCurve::circle(x.clone(), u.clone(), v.clone(), eps)?;
    let winding = maslov_index(sys, &curve)?;
    if winding.index != formula {
        return Err(Error::WindingInconsistent {
            raw: winding.raw.to_f64().unwrap_or(f64::NAN),
            rounded: formula,
            residual: (winding.index - formula).abs() as f64,
        });
    }
    Ok((formula, winding))
}

type DiskFn<F> = Arc<dyn Fn(F, F) -> PhasePoint<F> + Send + Sync>;

/// A map from the unit disk into phase space, transverse to the singular set
/// at finitely many interior preimages.
#[derive(Clone)]
pub struct TransverseDisk<F> {
    map: DiskFn<F>,
    preimages: Vec<(F, F)>,
    tangents: Vec<(TangentVector<F>, TangentVector<F>)>,
}

impl<F: Real> TransverseDisk<F> {
    /// Tangent pairs `(dS/dx, dS/dy)` are produced by central differences at
    /// each preimage.
    pub fn new(
        map: impl Fn(F, F) -> PhasePoint<F> + Send + Sync + 'static,
        preimages: Vec<(F, F)>,
    ) -> Self {
        let map: DiskFn<F> = Arc::new(map);
        let h = ComplexField::powf(F::EPSILON, real::<F>(1.0 / 3.0));
        let tangents = preimages
            .iter()
            .map(|&(x, y)| {
                let du = (map(x + h, y).into_coords() - map(x - h, y).into_coords()) / (h + h);
                let dv = (map(x, y + h).into_coords() - map(x, y - h).into_coords()) / (h + h);
                (
                    TangentVector::from_flat(du).expect("disk map has even dimension"),
                    TangentVector::from_flat(dv).expect("disk map has even dimension"),
                )
            })
            .collect();
        TransverseDisk {
            map,
            preimages,
            tangents,
        }
    }

    pub fn with_tangents(
        map: impl Fn(F, F) -> PhasePoint<F> + Send + Sync + 'static,
        preimages: Vec<(F, F)>,
        tangents: Vec<(TangentVector<F>, TangentVector<F>)>,
    ) -> Result<Self> {
        if preimages.len() != tangents.len() {
            return Err(Error::DimensionMismatch(
                "one tangent pair per preimage".into(),
            ));
        }
        Ok(TransverseDisk {
            map: Arc::new(map),
            preimages,
            tangents,
        })
    }

    pub fn preimages(&self) -> &[(F, F)] {
        &self.preimages
    }

    /// The positively parameterised boundary `S(cos 2 pi s, sin 2 pi s)`.
    pub fn boundary(&self) -> ClosedCurve<F> {
        let map = self.map.clone();
        ClosedCurve::from_fn(move |s: F| {
            let angle = F::two_pi() * s;
            map(ComplexField::cos(angle), ComplexField::sin(angle))
        })
    }
}

/// Per-singularity contribution in the disk sum.
#[derive(Clone, Debug)]
pub struct DiskTerm<F> {
    pub point: PhasePoint<F>,
    pub kind: SingularityKind,
    pub sigma: i64,
    pub contribution: i64,
}

/// The singularity-sum `2 sum_j sigma_j sgn tau(x_j)` over the disk's
/// preimages of the singular set.
pub fn disk_index_formula<F: Real>(
    sys: &IntegrableSystem<F>,
    disk: &TransverseDisk<F>,
) -> Result<(i64, Vec<DiskTerm<F>>)> {
    let mut total = 0i64;
    let mut terms = Vec::new();
    for (&(x, y), (u, v)) in disk.preimages.iter().zip(disk.tangents.iter()) {
        let point = (disk.map)(x, y);
        let data = tau_and_classify(sys, &point)?;
        let contribution = local_index_from_data(sys, &data, u, v)?;
        let tau_sign = if data.kind == SingularityKind::Hyperbolic {
            1
        } else {
            -1
        };
        terms.push(DiskTerm {
            point,
            kind: data.kind,
            sigma: contribution / (2 * tau_sign),
            contribution,
        });
        total += contribution;
    }
    Ok((total, terms))
}

/// Convenience: verify `[eta, theta]` sign against `sgn tau` at a point
/// (the orientation consistency behind the local index formula).
pub fn orientation_consistency<F: Real>(
    sys: &IntegrableSystem<F>,
    x: &PhasePoint<F>,
) -> Result<bool> {
    let data = tau_and_classify(sys, x)?;
    let (eta, theta) = match (&data.eta, &data.theta) {
        (Some(e), Some(t)) => (e, t),
        _ => return Err(Error::NotCorankOne { found: data.corank }),
    };
    let s = symplectic_product(eta, theta)?;
    let tau = data.tau.unwrap();
    Ok(s * tau > F::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;
    use crate::system::Hamiltonian;

    fn field(src: &str, n: usize) -> ScalarField<f64> {
        ScalarField::parse(src, n, &[]).unwrap()
    }

    fn one_freedom(src: &str, label: &str) -> IntegrableSystem<f64> {
        IntegrableSystem::new(vec![field(src, 1)], Hamiltonian::FirstField, label).unwrap()
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

    fn point(v: &[f64]) -> PhasePoint<f64> {
        PhasePoint::from_slice(v).unwrap()
    }

    fn tangent(v: &[f64]) -> TangentVector<f64> {
        TangentVector::from_slice(v).unwrap()
    }

    #[test]
    fn harmonic_flow_oriented_circle() {
        // z(s) = (cos 2 pi s, -sin 2 pi s): det M = i e^{2 pi i s}, index 2.
        let sys = one_freedom("(q1^2 + p1^2)/2", "harmonic");
        let curve = ClosedCurve::from_fn(|s: f64| {
            point(&[(2.0 * std::f64::consts::PI * s).cos(), -(2.0 * std::f64::consts::PI * s).sin()])
        });
        let res = maslov_index(&sys, &curve).unwrap();
        assert_eq!(res.index, 2);
        assert!(res.residual < 1e-10);
    }

    #[test]
    fn harmonic_positively_oriented_circle() {
        let sys = one_freedom("(q1^2 + p1^2)/2", "harmonic");
        let curve = ClosedCurve::circle(
            point(&[0.0, 0.0]),
            tangent(&[1.0, 0.0]),
            tangent(&[0.0, 1.0]),
            1.0,
        )
        .unwrap();
        let res = maslov_index(&sys, &curve).unwrap();
        assert_eq!(res.index, -2);
    }

    #[test]
    fn saddle_positively_oriented_circle() {
        let sys = one_freedom("(p1^2 - q1^2)/2", "saddle");
        let curve = ClosedCurve::circle(
            point(&[0.0, 0.0]),
            tangent(&[1.0, 0.0]),
            tangent(&[0.0, 1.0]),
            1.0,
        )
        .unwrap();
        let res = maslov_index(&sys, &curve).unwrap();
        assert_eq!(res.index, 2);
    }

    #[test]
    fn bifurcation_curve_index_all_eps() {
        for eps in [-0.1, 0.0, 0.1] {
            let sys = bifurcation(eps);
            let curve = ClosedCurve::circle(
                point(&[1.0, 0.0, 0.0, 0.0]),
                tangent(&[0.0, 0.0, 1.0, 0.0]),
                tangent(&[0.0, 0.0, 0.0, 1.0]),
                0.5,
            )
            .unwrap();
            let res = maslov_index(&sys, &curve).unwrap();
            assert_eq!(res.index, 2, "eps = {eps}");
        }
    }

    #[test]
    fn orientation_reversal_negates() {
        let sys = bifurcation(0.1);
        let forward = ClosedCurve::circle(
            point(&[1.0, 0.0, 0.0, 0.0]),
            tangent(&[0.0, 0.0, 1.0, 0.0]),
            tangent(&[0.0, 0.0, 0.0, 1.0]),
            0.5,
        )
        .unwrap();
        let backward = ClosedCurve::circle(
            point(&[1.0, 0.0, 0.0, 0.0]),
            tangent(&[0.0, 0.0, 1.0, 0.0]),
            tangent(&[0.0, 0.0, 0.0, -1.0]),
            0.5,
        )
        .unwrap();
        let f = maslov_index(&sys, &forward).unwrap();
        let b = maslov_index(&sys, &backward).unwrap();
        assert_eq!(f.index, -b.index);
    }

    #[test]
    fn sample_list_curve_matches_callback() {
        let sys = one_freedom("(q1^2 + p1^2)/2", "harmonic");
        let pts: Vec<PhasePoint<f64>> = (0..512)
            .map(|i| {
                let s = i as f64 / 512.0;
                point(&[(2.0 * std::f64::consts::PI * s).cos(), (2.0 * std::f64::consts::PI * s).sin()])
            })
            .collect();
        let curve = ClosedCurve::from_samples(pts).unwrap();
        let res = maslov_index(&sys, &curve).unwrap();
        assert_eq!(res.index, -2);
    }

    #[test]
    fn curve_through_singularity_errors() {
        // Circle through the origin where det M = 0 for the harmonic field;
        // s = 0.5 lands exactly on the singular point.
        let sys = one_freedom("(q1^2 + p1^2)/2", "harmonic");
        let curve = ClosedCurve::circle(
            point(&[0.5, 0.0]),
            tangent(&[1.0, 0.0]),
            tangent(&[0.0, 1.0]),
            0.5,
        )
        .unwrap();
        let err = maslov_index(&sys, &curve).unwrap_err();
        assert!(
            matches!(err, Error::CurveHitsSingularSet { .. })
                || matches!(err, Error::PhaseUnresolvable { .. }),
            "got {err}"
        );
    }

    #[test]
    fn open_curve_rejected() {
        let sys = one_freedom("(q1^2 + p1^2)/2", "harmonic");
        let spiral = ClosedCurve::from_fn(|s: f64| {
            let a = 2.0 * std::f64::consts::PI * s;
            point(&[(1.0 + 0.3 * s) * a.cos(), (1.0 + 0.3 * s) * a.sin()])
        });
        assert!(matches!(
            maslov_index(&sys, &spiral),
            Err(Error::CurveNotClosed { .. })
        ));
    }

    #[test]
    fn phase_increment_additive_over_split() {
        let sys = bifurcation(0.1);
        let curve = ClosedCurve::circle(
            point(&[1.0, 0.0, 0.0, 0.0]),
            tangent(&[0.0, 0.0, 1.0, 0.0]),
            tangent(&[0.0, 0.0, 0.0, 1.0]),
            0.5,
        )
        .unwrap();
        let total = phase_increment(&sys, &curve, 0.0, 1.0).unwrap();
        for split in [0.23, 0.5, 0.81] {
            let a = phase_increment(&sys, &curve, 0.0, split).unwrap();
            let b = phase_increment(&sys, &curve, split, 1.0).unwrap();
            assert!((a + b - total).abs() < 1e-9, "split at {split}");
        }
    }

    #[test]
    fn local_index_hand_values() {
        // Harmonic origin: 2 * sgn[e_q, e_p] * sgn tau = 2 * 1 * -1 = -2.
        let sys = one_freedom("(q1^2 + p1^2)/2", "harmonic");
        let x = point(&[0.0, 0.0]);
        let u = tangent(&[1.0, 0.0]);
        let v = tangent(&[0.0, 1.0]);
        assert_eq!(local_maslov_index(&sys, &x, &u, &v).unwrap(), -2);
        // Swap orientation: +2.
        assert_eq!(local_maslov_index(&sys, &x, &v, &u).unwrap(), 2);

        // Winding oracle agrees.
        let (idx, res) = local_maslov_index_verified(&sys, &x, &u, &v, 0.1).unwrap();
        assert_eq!(idx, -2);
        assert_eq!(res.index, -2);
    }

    #[test]
    fn local_index_bifurcation_hyperbolic() {
        let sys = bifurcation(0.0);
        let x = point(&[0.0, 0.0, 0.0, -1.0]);
        let u = tangent(&[1.0, 0.0, 0.0, 0.0]);
        let v = tangent(&[0.0, 0.0, 1.0, 0.0]);
        let (idx, res) = local_maslov_index_verified(&sys, &x, &u, &v, 0.05).unwrap();
        assert_eq!(idx, 2);
        assert_eq!(res.index, 2);
    }

    #[test]
    fn local_index_rejects_dependent_projections() {
        let sys = bifurcation(0.0);
        let x = point(&[0.0, 0.0, 0.0, -1.0]);
        // Both tangents in ker K^2 (the (q2, p2) plane): projections vanish.
        let u = tangent(&[0.0, 1.0, 0.0, 0.0]);
        let v = tangent(&[0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            local_maslov_index(&sys, &x, &u, &v),
            Err(Error::DegenerateProjection { .. })
        ));
    }

    #[test]
    fn disk_formula_double_well() {
        // H = p^2/2 + (q^2 - 1)^2/4: elliptic at q = +-1, hyperbolic at 0.
        // Positively oriented disk of radius 3 encloses all three; the sum
        // is 2(-1) + 2(+1) + 2(-1) = -2 and matches the boundary winding.
        let sys = one_freedom("p1^2/2 + (q1^2 - 1)^2/4", "double-well");
        let disk = TransverseDisk::new(
            |x: f64, y: f64| point(&[3.0 * x, 3.0 * y]),
            vec![(-1.0 / 3.0, 0.0), (0.0, 0.0), (1.0 / 3.0, 0.0)],
        );
        let (total, terms) = disk_index_formula(&sys, &disk).unwrap();
        assert_eq!(total, -2);
        assert_eq!(
            terms.iter().map(|t| t.contribution).collect::<Vec<_>>(),
            vec![-2, 2, -2]
        );
        let boundary = maslov_index(&sys, &disk.boundary()).unwrap();
        assert_eq!(boundary.index, total);
    }

    #[test]
    fn disk_formula_bifurcation_matches_winding() {
        for eps in [-0.1, 0.1] {
            let sys = bifurcation(eps);
            // Disk in the p-plane at q = (1, 0), radius 0.5; the singular
            // preimage solves p1 = 0, p2 = eps (q1 = 1).
            let disk = TransverseDisk::new(
                move |x: f64, y: f64| point(&[1.0, 0.0, 0.5 * x, 0.5 * y]),
                vec![(0.0, eps / 0.5)],
            );
            let (total, _) = disk_index_formula(&sys, &disk).unwrap();
            let boundary = maslov_index(&sys, &disk.boundary()).unwrap();
            assert_eq!(total, boundary.index, "eps = {eps}");
            assert_eq!(total, 2);
        }
    }

    #[test]
    fn disk_with_no_preimages_is_zero() {
        let sys = one_freedom("(q1^2 + p1^2)/2", "harmonic");
        let disk = TransverseDisk::new(|x: f64, y: f64| point(&[2.0 + 0.5 * x, 0.5 * y]), vec![]);
        let (total, terms) = disk_index_formula(&sys, &disk).unwrap();
        assert_eq!(total, 0);
        assert!(terms.is_empty());
        let boundary = maslov_index(&sys, &disk.boundary()).unwrap();
        assert_eq!(boundary.index, 0);
    }

    #[test]
    fn disk_with_degenerate_preimage_errors() {
        let sys = bifurcation(0.0);
        // Preimage at p = (0, 0) is the degenerate singularity.
        let disk = TransverseDisk::new(
            |x: f64, y: f64| point(&[1.0, 0.0, 0.5 * x, 0.5 * y]),
            vec![(0.0, 0.0)],
        );
        assert!(matches!(
            disk_index_formula(&sys, &disk),
            Err(Error::DegenerateSingularity { .. })
        ));
    }

    #[test]
    fn deformation_invariance_under_small_perturbation() {
        let sys = bifurcation(0.1);
        for bump in [0.0, 1e-3] {
            let curve = ClosedCurve::from_fn(move |s: f64| {
                let a = 2.0 * std::f64::consts::PI * s;
                // Closure-preserving wobble of size `bump`.
                let r = 0.5 + bump * (2.0 * a).sin();
                point(&[1.0, 0.0, r * a.cos(), r * a.sin()])
            });
            assert_eq!(maslov_index(&sys, &curve).unwrap().index, 2);
        }
    }
}
