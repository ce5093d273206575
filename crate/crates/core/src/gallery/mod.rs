//! Built-in example systems with known analytic structure: one-freedom
//! Hamiltonians, the two-freedom transcritical bifurcation family, product
//! systems for exponent tests, and SO(n)-symmetric systems.

pub mod rotational;

pub use rotational::{ActionKind, RotationalKind, RotationalSystem, RotationalVerdict};

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::scalar::Real;
use crate::symplectic::PhasePoint;
use crate::system::{Hamiltonian, IntegrableSystem};

/// One-freedom gallery members.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OneFreedom {
    /// `(q^2 + p^2)/2`: one elliptic fixed point at the origin.
    Harmonic,
    /// `(p^2 - q^2)/2`: one hyperbolic fixed point at the origin.
    Saddle,
    /// `p^2/2 - q^3/3 + a q`: saddle-centre pair at `q = +-sqrt(a)` for
    /// `a > 0`, a single degenerate fixed point at `a = 0`.
    Cubic { a: f64 },
    /// `p^2/2 + (q^2 - 1)^2/4`: elliptic at `q = +-1`, hyperbolic at 0.
    DoubleWell,
}

impl OneFreedom {
    pub fn source(self) -> String {
        match self {
            OneFreedom::Harmonic => "(q1^2 + p1^2)/2".to_string(),
            OneFreedom::Saddle => "(p1^2 - q1^2)/2".to_string(),
            OneFreedom::Cubic { .. } => "p1^2/2 - q1^3/3 + a*q1".to_string(),
            OneFreedom::DoubleWell => "p1^2/2 + (q1^2 - 1)^2/4".to_string(),
        }
    }

    pub fn label(self) -> String {
        match self {
            OneFreedom::Harmonic => "harmonic".to_string(),
            OneFreedom::Saddle => "saddle".to_string(),
            OneFreedom::Cubic { a } => format!("cubic(a={a})"),
            OneFreedom::DoubleWell => "double-well".to_string(),
        }
    }

    /// Fixed points of the flow (all on `p = 0`).
    pub fn fixed_points<F: Real>(self) -> Vec<PhasePoint<F>> {
        let qs: Vec<f64> = match self {
            OneFreedom::Harmonic | OneFreedom::Saddle => vec![0.0],
            OneFreedom::Cubic { a } => {
                if a > 0.0 {
                    vec![-a.sqrt(), a.sqrt()]
                } else if a == 0.0 {
                    vec![0.0]
                } else {
                    vec![]
                }
            }
            OneFreedom::DoubleWell => vec![-1.0, 0.0, 1.0],
        };
        qs.into_iter()
            .map(|q| {
                PhasePoint::new(&[crate::scalar::real::<F>(q)], &[F::zero()])
                    .expect("one freedom point")
            })
            .collect()
    }
}

/// Build a one-freedom system from a builtin or from DSL source text.
pub fn make_one_freedom<F: Real>(builtin: OneFreedom) -> Result<IntegrableSystem<F>> {
    let params: Vec<(String, F)> = match builtin {
        OneFreedom::Cubic { a } => vec![("a".to_string(), crate::scalar::real(a))],
        _ => Vec::new(),
    };
    let field = ScalarField::parse(&builtin.source(), 1, &params)?;
    IntegrableSystem::new(vec![field], Hamiltonian::FirstField, builtin.label())
}

pub fn make_one_freedom_from_source<F: Real>(
    source: &str,
    params: &[(String, F)],
) -> Result<IntegrableSystem<F>> {
    let field = ScalarField::parse(source, 1, params)?;
    IntegrableSystem::new(vec![field], Hamiltonian::FirstField, source.to_string())
}

/// The two-freedom transcritical family
/// `F_1 = p1^2/2 + p2 q1^2/2 - eps q1`, `F_2 = p2`. The singular set is
/// `{p1 = 0, p2 q1 = eps}`; for `eps != 0` it is entirely nondegenerate.
pub fn make_bifurcation_family<F: Real>(eps: f64) -> Result<IntegrableSystem<F>> {
    let f1 = ScalarField::parse(
        "p1^2/2 + p2*q1^2/2 - eps*q1",
        2,
        &[("eps".to_string(), crate::scalar::real(eps))],
    )?;
    let f2 = ScalarField::parse("p2", 2, &[])?;
    IntegrableSystem::new(
        vec![f1, f2],
        Hamiltonian::FirstField,
        format!("bifurcation(eps={eps})"),
    )
}

/// The curve of the bifurcation discussion: `q = (1, 0)` fixed, `p` tracing
/// a positively oriented circle of radius 1/2.
pub fn bifurcation_curve<F: Real>() -> crate::winding::ClosedCurve<F> {
    let center = PhasePoint::from_slice(&[
        F::one(),
        F::zero(),
        F::zero(),
        F::zero(),
    ])
    .unwrap();
    let u = crate::symplectic::TangentVector::from_slice(&[
        F::zero(),
        F::zero(),
        F::one(),
        F::zero(),
    ])
    .unwrap();
    let v = crate::symplectic::TangentVector::from_slice(&[
        F::zero(),
        F::zero(),
        F::zero(),
        F::one(),
    ])
    .unwrap();
    crate::winding::ClosedCurve::circle(center, u, v, crate::scalar::real(0.5)).unwrap()
}

/// Decoupled two-freedom systems for exponent tests:
/// `F_1 = (p1^2 -+ q1^2)/2` (hyperbolic or elliptic block) and
/// `F_2 = (p2^2 + q2^2)/2`, with `H = sum w_a F_a`.
pub fn make_product<F: Real>(hyperbolic: bool, weights: Vec<F>) -> Result<IntegrableSystem<F>> {
    let f1 = if hyperbolic {
        ScalarField::parse("(p1^2 - q1^2)/2", 2, &[])?
    } else {
        ScalarField::parse("(p1^2 + q1^2)/2", 2, &[])?
    };
    let f2 = ScalarField::parse("(p2^2 + q2^2)/2", 2, &[])?;
    let label = if hyperbolic {
        "product-hyperbolic"
    } else {
        "product-elliptic"
    };
    IntegrableSystem::new(vec![f1, f2], Hamiltonian::Weights(weights), label)
}

/// The reference point on the singular torus of the product systems.
pub fn product_torus_point<F: Real>() -> PhasePoint<F> {
    PhasePoint::from_slice(&[F::zero(), F::one(), F::zero(), F::zero()]).unwrap()
}

/// Name-based construction for the CLI. Parameters not consumed by the
/// builtin are rejected by the caller's schema validation.
pub enum GallerySystem<F> {
    Plain(IntegrableSystem<F>),
    Rotational(RotationalSystem<F>),
}

impl<F: Real> GallerySystem<F> {
    pub fn system(&self) -> &IntegrableSystem<F> {
        match self {
            GallerySystem::Plain(s) => s,
            GallerySystem::Rotational(r) => r.system(),
        }
    }

    pub fn rotational(&self) -> Option<&RotationalSystem<F>> {
        match self {
            GallerySystem::Rotational(r) => Some(r),
            GallerySystem::Plain(_) => None,
        }
    }
}

/// Instantiate a gallery system by name.
///
/// Names: `harmonic`, `saddle`, `cubic` (`a`), `double_well`, `bifurcation`
/// (`eps`), `product_hyperbolic` / `product_elliptic` (`w1`, `w2`),
/// `rotational` (`n`, radial Hamiltonian via `h_source`).
pub fn build_named<F: Real>(
    name: &str,
    params: &std::collections::BTreeMap<String, f64>,
    h_source: Option<&str>,
) -> Result<GallerySystem<F>> {
    let allowed: &[&str] = match name {
        "harmonic" | "saddle" | "double_well" => &[],
        "cubic" => &["a"],
        "bifurcation" => &["eps"],
        "product_hyperbolic" | "product_elliptic" => &["w1", "w2"],
        "rotational" => &["n"],
        other => {
            return Err(Error::Invalid(format!("unknown builtin system `{other}`")));
        }
    };
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Invalid(format!(
                "unknown parameter `{key}` for builtin `{name}` (accepted: {allowed:?})"
            )));
        }
    }
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let sys = match name {
        "harmonic" => GallerySystem::Plain(make_one_freedom(OneFreedom::Harmonic)?),
        "saddle" => GallerySystem::Plain(make_one_freedom(OneFreedom::Saddle)?),
        "cubic" => GallerySystem::Plain(make_one_freedom(OneFreedom::Cubic { a: get("a", 0.0) })?),
        "double_well" => GallerySystem::Plain(make_one_freedom(OneFreedom::DoubleWell)?),
        "bifurcation" => GallerySystem::Plain(make_bifurcation_family(get("eps", 0.0))?),
        "product_hyperbolic" => GallerySystem::Plain(make_product(
            true,
            vec![
                crate::scalar::real(get("w1", 1.0)),
                crate::scalar::real(get("w2", 1.0)),
            ],
        )?),
        "product_elliptic" => GallerySystem::Plain(make_product(
            false,
            vec![
                crate::scalar::real(get("w1", 1.0)),
                crate::scalar::real(get("w2", 1.0)),
            ],
        )?),
        "rotational" => {
            let n = get("n", 3.0) as usize;
            let h = h_source.unwrap_or("(r2 + p2)/2");
            GallerySystem::Rotational(RotationalSystem::new(n, h)?)
        }
        _ => unreachable!("validated above"),
    };
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::singularity::{tau_and_classify, SingularityKind};

    #[test]
    fn cubic_zero_is_degenerate_at_origin() {
        let sys = make_one_freedom::<f64>(OneFreedom::Cubic { a: 0.0 }).unwrap();
        let fp = &OneFreedom::Cubic { a: 0.0 }.fixed_points::<f64>()[0];
        let data = tau_and_classify(&sys, fp).unwrap();
        assert_eq!(data.kind, SingularityKind::DegenerateCorank1);
    }

    #[test]
    fn cubic_positive_a_splits_into_centre_and_saddle() {
        let a = 0.04;
        let sys = make_one_freedom::<f64>(OneFreedom::Cubic { a }).unwrap();
        let fps = OneFreedom::Cubic { a }.fixed_points::<f64>();
        assert_eq!(fps.len(), 2);
        assert!((fps[0].q(0) + 0.2).abs() < 1e-12);
        assert!((fps[1].q(0) - 0.2).abs() < 1e-12);
        // V'' = -2q: centre (elliptic) at q = -0.2, saddle at q = +0.2.
        let left = tau_and_classify(&sys, &fps[0]).unwrap();
        let right = tau_and_classify(&sys, &fps[1]).unwrap();
        assert_eq!(left.kind, SingularityKind::Elliptic);
        assert_eq!(right.kind, SingularityKind::Hyperbolic);
    }

    #[test]
    fn double_well_kinds() {
        let sys = make_one_freedom::<f64>(OneFreedom::DoubleWell).unwrap();
        let kinds: Vec<SingularityKind> = OneFreedom::DoubleWell
            .fixed_points::<f64>()
            .iter()
            .map(|fp| tau_and_classify(&sys, fp).unwrap().kind)
            .collect();
        assert_eq!(
            kinds,
            vec![
                SingularityKind::Elliptic,
                SingularityKind::Hyperbolic,
                SingularityKind::Elliptic
            ]
        );
    }

    #[test]
    fn bifurcation_family_tau_sign_follows_p2() {
        // With unit c, tau = -p2 on the branch {p1 = q1 = 0} of eps = 0.
        let sys = make_bifurcation_family::<f64>(0.0).unwrap();
        for p2 in [0.5, 1.0, 2.0] {
            let up = PhasePoint::from_slice(&[0.0, 0.3, 0.0, p2]).unwrap();
            let data = tau_and_classify(&sys, &up).unwrap();
            assert_eq!(data.kind, SingularityKind::Elliptic);
            assert!((data.tau.unwrap() + p2).abs() < 1e-12);

            let down = PhasePoint::from_slice(&[0.0, 0.3, 0.0, -p2]).unwrap();
            let data = tau_and_classify(&sys, &down).unwrap();
            assert_eq!(data.kind, SingularityKind::Hyperbolic);
            assert!((data.tau.unwrap() - p2).abs() < 1e-12);
        }
    }

    #[test]
    fn bifurcation_nonzero_eps_is_entirely_nondegenerate() {
        let sys = make_bifurcation_family::<f64>(0.1).unwrap();
        // Walk the singular branch p1 = 0, p2 = eps / q1.
        for i in 0..40 {
            let q1 = 0.25 + 0.05 * i as f64;
            let z = PhasePoint::from_slice(&[q1, 0.0, 0.0, 0.1 / q1]).unwrap();
            let data = tau_and_classify(&sys, &z).unwrap();
            assert!(
                matches!(
                    data.kind,
                    SingularityKind::Elliptic | SingularityKind::Hyperbolic
                ),
                "kind {:?} at q1 = {q1}",
                data.kind
            );
        }
    }

    #[test]
    fn named_construction() {
        let mut params = std::collections::BTreeMap::new();
        params.insert("eps".to_string(), 0.1);
        let sys = build_named::<f64>("bifurcation", &params, None).unwrap();
        assert_eq!(sys.system().n(), 2);
        assert!(build_named::<f64>("nonsense", &params, None).is_err());
    }
}
