//! SO(n)-symmetric systems: integrals `(H, L_12, L^2_(3), ..., L^2_(n))`,
//! the analytic orbits of the rotational actions, and the taxonomy of their
//! corank-one singularities (spherical, axial, radial, (1,2)-axial).

use crate::error::{Error, Result};
use crate::expr::ast::Expr;
use crate::expr::parser::{self, VarContext};
use crate::expr::ScalarField;
use crate::scalar::{real, Real};
use crate::singularity::{tau_and_classify, SingularityKind};
use crate::symplectic::PhasePoint;
use crate::system::{Hamiltonian, IntegrableSystem};
use crate::winding::ClosedCurve;
use nalgebra::{ComplexField, DVector};

/// Which rotational action generates the angle contour.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    /// Rigid rotation in the (1,2)-plane generated by `L_12`.
    L12,
    /// `2 pi`-periodic rotation generated by `L_(m) = sqrt(L^2_(m))`.
    Lm(usize),
}

/// Kind of rotational singularity at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationalKind {
    Spherical,
    Axial(usize),
    Radial(usize),
    TwelveAxial,
    None,
}

impl RotationalKind {
    pub fn describe(self) -> String {
        match self {
            RotationalKind::Spherical => "spherical".to_string(),
            RotationalKind::Axial(m) => format!("{m}-axial"),
            RotationalKind::Radial(m) => format!("{m}-radial"),
            RotationalKind::TwelveAxial => "(1,2)-axial".to_string(),
            RotationalKind::None => "none".to_string(),
        }
    }
}

/// Classification verdict with the chart value of `Tr(K^2)/2` and the
/// cross-check from the generic corank machinery.
#[derive(Clone, Debug)]
pub struct RotationalVerdict<F> {
    pub kind: RotationalKind,
    pub nondegenerate: bool,
    /// Chart normalization: `-(h_rr h_pp - h_rp^2)` for spherical points,
    /// `-L^2_(m)` for `m`-axial points, `0` for degenerate kinds.
    pub half_tr_k2: F,
    /// Verdict of `tau_and_classify` at the same point.
    pub cross_kind: SingularityKind,
}

/// A rotationally invariant Hamiltonian `H = h(r^2, p^2, r.p)` promoted to
/// the integrable system `(H, L_12, L^2_(3), ..., L^2_(n))` on `R^{2n}`.
pub struct RotationalSystem<F> {
    system: IntegrableSystem<F>,
    n_space: usize,
    /// `h` in the invariants, parameters `(r2, p2, rp)`.
    h_ast: Expr,
}

const INVARIANT_NAMES: [&str; 3] = ["r2", "p2", "rp"];

fn sum_of(terms: impl Iterator<Item = String>) -> String {
    terms.collect::<Vec<_>>().join(" + ")
}

fn r2_source(j: usize) -> String {
    sum_of((1..=j).map(|i| format!("q{i}^2")))
}

fn p2_source(j: usize) -> String {
    sum_of((1..=j).map(|i| format!("p{i}^2")))
}

fn rp_source(j: usize) -> String {
    sum_of((1..=j).map(|i| format!("q{i}*p{i}")))
}

fn l2_source(j: usize) -> String {
    format!(
        "({})*({}) - ({})^2",
        r2_source(j),
        p2_source(j),
        rp_source(j)
    )
}

impl<F: Real> RotationalSystem<F> {
    /// Parse `h_source` over the invariant symbols `r2`, `p2`, `rp` and
    /// assemble the system. Involution over the integrals is verified by
    /// sampling; a non-invariant `h` is rejected there.
    pub fn new(n_space: usize, h_source: &str) -> Result<Self> {
        if n_space < 3 {
            return Err(Error::Invalid(
                "rotational systems need space dimension n >= 3".into(),
            ));
        }
        let names: Vec<String> = INVARIANT_NAMES.iter().map(|s| s.to_string()).collect();
        // No coordinates in scope: `p2` must mean the invariant, and raw
        // phase-space coordinates are not part of the radial grammar.
        let ctx = VarContext {
            n: 0,
            param_names: &names,
        };
        let h_ast = parser::parse(h_source, &ctx)?;
        let empty_ctx_names: Vec<String> = Vec::new();
        let coord_ctx = VarContext {
            n: n_space,
            param_names: &empty_ctx_names,
        };
        let subs = [
            parser::parse(&r2_source(n_space), &coord_ctx)?,
            parser::parse(&p2_source(n_space), &coord_ctx)?,
            parser::parse(&rp_source(n_space), &coord_ctx)?,
        ];
        let h_field = ScalarField::from_expr(h_ast.substitute_params(&subs), n_space, &[]);
        Self::with_hamiltonian_field(n_space, h_field, h_ast)
    }

    /// Assemble from an explicit Hamiltonian field (used directly by tests
    /// that probe the involution gate with non-invariant Hamiltonians).
    pub fn with_hamiltonian_field(
        n_space: usize,
        h_field: ScalarField<F>,
        h_ast: Expr,
    ) -> Result<Self> {
        let mut fields = vec![h_field];
        fields.push(ScalarField::parse("q1*p2 - q2*p1", n_space, &[])?);
        for j in 3..=n_space {
            fields.push(ScalarField::parse(&l2_source(j), n_space, &[])?);
        }
        let system = IntegrableSystem::new(
            fields,
            Hamiltonian::FirstField,
            format!("rotational(n={n_space})"),
        )?;
        Ok(RotationalSystem {
            system,
            n_space,
            h_ast,
        })
    }

    #[inline]
    pub fn system(&self) -> &IntegrableSystem<F> {
        &self.system
    }

    #[inline]
    pub fn n_space(&self) -> usize {
        self.n_space
    }

    /// `L_12(z)`.
    pub fn l12(&self, z: &PhasePoint<F>) -> F {
        z.q(0) * z.p(1) - z.q(1) * z.p(0)
    }

    /// `L^2_(j)(z) = r^2_(j) p^2_(j) - (r_(j).p_(j))^2`, defined for j >= 2.
    pub fn l2_partial(&self, j: usize, z: &PhasePoint<F>) -> F {
        let mut r2 = F::zero();
        let mut p2 = F::zero();
        let mut rp = F::zero();
        for i in 0..j {
            r2 += z.q(i) * z.q(i);
            p2 += z.p(i) * z.p(i);
            rp += z.q(i) * z.p(i);
        }
        r2 * p2 - rp * rp
    }

    /// Closed orbit of the chosen rotational action through `z`.
    pub fn action_curve(&self, z: &PhasePoint<F>, which: ActionKind) -> Result<ClosedCurve<F>> {
        let n = self.n_space;
        let tol = real::<F>(1e-10) * (F::one() + z.coords().norm_squared());
        match which {
            ActionKind::L12 => {
                if self.l12(z).abs() <= tol {
                    return Err(Error::Invalid(
                        "L12 vanishes at the base point; the (1,2)-rotation is not an angle contour".into(),
                    ));
                }
                let base = z.clone();
                Ok(ClosedCurve::from_fn(move |s: F| {
                    let angle = F::two_pi() * s;
                    let (sin, cos) = (ComplexField::sin(angle), ComplexField::cos(angle));
                    let mut out = base.coords().clone();
                    out[0] = cos * base.q(0) - sin * base.q(1);
                    out[1] = sin * base.q(0) + cos * base.q(1);
                    out[n] = cos * base.p(0) - sin * base.p(1);
                    out[n + 1] = sin * base.p(0) + cos * base.p(1);
                    PhasePoint::from_flat(out).expect("dimension preserved")
                }))
            }
            ActionKind::Lm(m) => {
                if !(3..=n).contains(&m) {
                    return Err(Error::Invalid(format!(
                        "action L({m}) undefined for a system with n = {n}"
                    )));
                }
                let l2 = self.l2_partial(m, z);
                if l2 <= tol {
                    return Err(Error::Invalid(format!(
                        "L^2_({m}) vanishes at the base point; the L({m}) orbit degenerates"
                    )));
                }
                let l = ComplexField::sqrt(l2);
                // Invariants of the projection, frozen along the orbit.
                let mut r2 = F::zero();
                let mut p2 = F::zero();
                let mut rp = F::zero();
                for i in 0..m {
                    r2 += z.q(i) * z.q(i);
                    p2 += z.p(i) * z.p(i);
                    rp += z.q(i) * z.p(i);
                }
                // u = (r^2 p - (r.p) r)/L, v = (p^2 r - (r.p) p)/L.
                let mut u = DVector::zeros(m);
                let mut v = DVector::zeros(m);
                for i in 0..m {
                    u[i] = (r2 * z.p(i) - rp * z.q(i)) / l;
                    v[i] = (p2 * z.q(i) - rp * z.p(i)) / l;
                }
                let base = z.clone();
                Ok(ClosedCurve::from_fn(move |s: F| {
                    let angle = F::two_pi() * s;
                    let (sin, cos) = (ComplexField::sin(angle), ComplexField::cos(angle));
                    let mut out = base.coords().clone();
                    for i in 0..m {
                        out[i] = cos * base.q(i) + sin * u[i];
                        out[n + i] = cos * base.p(i) - sin * v[i];
                    }
                    PhasePoint::from_flat(out).expect("dimension preserved")
                }))
            }
        }
    }

    /// Gradient-based spherical conditions: `r.H_p = 0`, `p.H_r = 0` and
    /// `r.H_r = p.H_p`.
    fn spherical_defect(&self, z: &PhasePoint<F>) -> Result<(F, F)> {
        let g = self.system.field(0).grad_flat(z.coords().as_slice())?;
        let n = self.n_space;
        let mut r_hp = F::zero();
        let mut p_hr = F::zero();
        let mut r_hr = F::zero();
        let mut p_hp = F::zero();
        for i in 0..n {
            r_hr += z.q(i) * g[i];
            r_hp += z.q(i) * g[n + i];
            p_hr += z.p(i) * g[i];
            p_hp += z.p(i) * g[n + i];
        }
        let defect = r_hp.abs().max(p_hr.abs()).max((r_hr - p_hp).abs());
        let scale = (F::one() + z.coords().norm()) * (F::one() + g.norm());
        Ok((defect, scale))
    }

    /// `Tr(K^2)/2` of a spherical singularity in local radial coordinates,
    /// with the chart normalization `c = (1, 0, ..., -k)`. The `r != 0`
    /// chart is primary; the `p != 0` mirror chart is the fallback.
    pub fn spherical_half_tr_k2(&self, z: &PhasePoint<F>) -> Result<F> {
        let n = self.n_space;
        let mut r2 = F::zero();
        let mut p2 = F::zero();
        let mut rp = F::zero();
        for i in 0..n {
            r2 += z.q(i) * z.q(i);
            p2 += z.p(i) * z.p(i);
            rp += z.q(i) * z.p(i);
        }
        let l2 = r2 * p2 - rp * rp;
        let names = vec!["L2".to_string()];
        let ctx = VarContext {
            n: 1,
            param_names: &names,
        };
        let (subs, chart_point) = if r2 >= p2 {
            if r2 == F::zero() {
                return Err(Error::Invalid(
                    "spherical chart undefined at the origin".into(),
                ));
            }
            let r = ComplexField::sqrt(r2);
            (
                [
                    parser::parse("q1^2", &ctx)?,
                    parser::parse("p1^2 + L2/q1^2", &ctx)?,
                    parser::parse("q1*p1", &ctx)?,
                ],
                PhasePoint::new(&[r], &[rp / r])?,
            )
        } else {
            let p = ComplexField::sqrt(p2);
            (
                [
                    parser::parse("p1^2 + L2/q1^2", &ctx)?,
                    parser::parse("q1^2", &ctx)?,
                    parser::parse("-(q1*p1)", &ctx)?,
                ],
                PhasePoint::new(&[p], &[-rp / p])?,
            )
        };
        let chart = ScalarField::from_expr(
            self.h_ast.substitute_params(&subs),
            1,
            &[("L2".to_string(), l2)],
        );
        let h = chart.hess(&chart_point)?;
        Ok(-(h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(0, 1)]))
    }

    /// Test the rotational singularity conditions at `z`. Multiple matching
    /// conditions are reported as an ambiguity, never silently resolved.
    pub fn classify(&self, z: &PhasePoint<F>) -> Result<RotationalVerdict<F>> {
        let n = self.n_space;
        let znorm2 = z.coords().norm_squared();
        let comp_tol = real::<F>(1e-9) * (F::one() + z.coords().norm());
        let l2_tol = real::<F>(1e-9) * (F::one() + znorm2) * (F::one() + znorm2);

        let mut matches: Vec<RotationalKind> = Vec::new();

        let (sph_defect, sph_scale) = self.spherical_defect(z)?;
        if sph_defect <= real::<F>(1e-9) * sph_scale {
            matches.push(RotationalKind::Spherical);
        }

        for m in 3..=n {
            let zm_small = z.q(m - 1).abs() <= comp_tol && z.p(m - 1).abs() <= comp_tol;
            if zm_small && self.l2_partial(m - 1, z) > l2_tol {
                matches.push(RotationalKind::Axial(m));
            }
        }

        // Radial: r_(m) parallel to p_(m). Parallelism in R^j implies it in
        // every lower projection, so only the largest consecutive index
        // starting at 3 is reported.
        let mut radial_m = None;
        for m in 3..=n {
            if self.l2_partial(m, z) <= l2_tol {
                radial_m = Some(m);
            } else {
                break;
            }
        }
        if let Some(m) = radial_m {
            matches.push(RotationalKind::Radial(m));
        }

        if z.q(0).abs() <= comp_tol
            && z.q(1).abs() <= comp_tol
            && z.p(0).abs() <= comp_tol
            && z.p(1).abs() <= comp_tol
        {
            matches.push(RotationalKind::TwelveAxial);
        }

        if matches.len() > 1 {
            return Err(Error::AmbiguousClassification {
                matches: matches.iter().map(|k| k.describe()).collect(),
            });
        }

        let cross_kind = tau_and_classify(&self.system, z)?.kind;
        let verdict = match matches.first().copied() {
            None => RotationalVerdict {
                kind: RotationalKind::None,
                nondegenerate: false,
                half_tr_k2: F::zero(),
                cross_kind,
            },
            Some(RotationalKind::Spherical) => {
                let half = self.spherical_half_tr_k2(z)?;
                RotationalVerdict {
                    kind: RotationalKind::Spherical,
                    nondegenerate: half.abs() > l2_tol,
                    half_tr_k2: half,
                    cross_kind,
                }
            }
            Some(RotationalKind::Axial(m)) => {
                let half = -self.l2_partial(m, z);
                RotationalVerdict {
                    kind: RotationalKind::Axial(m),
                    nondegenerate: half.abs() > l2_tol,
                    half_tr_k2: half,
                    cross_kind,
                }
            }
            Some(RotationalKind::Radial(m)) => RotationalVerdict {
                kind: RotationalKind::Radial(m),
                nondegenerate: false,
                half_tr_k2: F::zero(),
                cross_kind,
            },
            Some(RotationalKind::TwelveAxial) => RotationalVerdict {
                kind: RotationalKind::TwelveAxial,
                nondegenerate: false,
                half_tr_k2: F::zero(),
                cross_kind,
            },
            Some(RotationalKind::None) => unreachable!(),
        };
        Ok(verdict)
    }
}
