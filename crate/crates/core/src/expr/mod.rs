//! Scalar fields on phase space: parsed DSL expressions with exact
//! forward-mode derivatives, or black-box closures differentiated by central
//! finite differences.

pub mod ast;
pub mod parser;

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use crate::symplectic::{PhasePoint, TangentVector};
use ast::Expr;
use nalgebra::ComplexField;
use nalgebra::{DMatrix, DVector};
use parser::VarContext;
use std::fmt;
use std::sync::Arc;

/// How derivatives are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffStrategy {
    /// Nested first-order forward differentiation; exact up to rounding.
    Forward,
    /// Central finite differences with scale-aware steps.
    FiniteDifference,
}

type BoxedFn<F> = Arc<dyn Fn(&[F]) -> Result<F> + Send + Sync>;

enum Repr<F> {
    Expr {
        ast: Expr,
        param_names: Vec<String>,
        param_values: Vec<F>,
    },
    Closure(BoxedFn<F>),
}

impl<F> Clone for Repr<F>
where
    F: Clone,
{
    fn clone(&self) -> Self {
        match self {
            Repr::Expr {
                ast,
                param_names,
                param_values,
            } => Repr::Expr {
                ast: ast.clone(),
                param_names: param_names.clone(),
                param_values: param_values.clone(),
            },
            Repr::Closure(f) => Repr::Closure(f.clone()),
        }
    }
}

/// An evaluable function of `z in R^{2n}` with gradient and Hessian.
/// Immutable after construction; evaluation is pure.
#[derive(Clone)]
pub struct ScalarField<F> {
    n: usize,
    repr: Repr<F>,
    strategy: DiffStrategy,
}

impl<F> fmt::Debug for ScalarField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Expr { ast, param_names, .. } => f
                .debug_struct("ScalarField")
                .field("n", &self.n)
                .field("expr", &ast.to_source(param_names))
                .finish(),
            Repr::Closure(_) => f
                .debug_struct("ScalarField")
                .field("n", &self.n)
                .field("expr", &"<closure>")
                .finish(),
        }
    }
}

impl<F: Real> ScalarField<F> {
    /// Parse DSL source over coordinates `q1..qn, p1..pn` with the given
    /// parameter bindings. Parameters are fixed at parse time; re-binding
    /// means re-parsing into a new field.
    pub fn parse(source: &str, n: usize, params: &[(String, F)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("number of freedoms must be at least 1".into()));
        }
        for (name, _) in params {
            if let Some(rest) = name.strip_prefix(['q', 'p']) {
                if let Ok(i) = rest.parse::<usize>() {
                    if (1..=n).contains(&i) {
                        return Err(Error::Invalid(format!(
                            "parameter `{name}` shadows a coordinate name"
                        )));
                    }
                }
            }
        }
        let param_names: Vec<String> = params.iter().map(|(k, _)| k.clone()).collect();
        let param_values: Vec<F> = params.iter().map(|(_, v)| *v).collect();
        let ctx = VarContext {
            n,
            param_names: &param_names,
        };
        let ast = parser::parse(source, &ctx)?;
        Ok(ScalarField {
            n,
            repr: Repr::Expr {
                ast,
                param_names,
                param_values,
            },
            strategy: DiffStrategy::Forward,
        })
    }

    /// Wrap an already-built expression tree (gallery constructors).
    pub fn from_expr(ast: Expr, n: usize, params: &[(String, F)]) -> Self {
        ScalarField {
            n,
            repr: Repr::Expr {
                ast,
                param_names: params.iter().map(|(k, _)| k.clone()).collect(),
                param_values: params.iter().map(|(_, v)| *v).collect(),
            },
            strategy: DiffStrategy::Forward,
        }
    }

    /// Black-box field; derivatives fall back to central finite differences.
    pub fn from_fn(n: usize, f: impl Fn(&[F]) -> Result<F> + Send + Sync + 'static) -> Self {
        ScalarField {
            n,
            repr: Repr::Closure(Arc::new(f)),
            strategy: DiffStrategy::FiniteDifference,
        }
    }

    /// Force the finite-difference strategy (useful to cross-check the
    /// forward-mode path on the same expression).
    pub fn with_finite_differences(mut self) -> Self {
        self.strategy = DiffStrategy::FiniteDifference;
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    #[inline]
    pub fn strategy(&self) -> DiffStrategy {
        self.strategy
    }

    /// DSL source of the field, if it is expression-backed.
    pub fn source(&self) -> Option<String> {
        match &self.repr {
            Repr::Expr { ast, param_names, .. } => Some(ast.to_source(param_names)),
            Repr::Closure(_) => None,
        }
    }

    /// Names of the bound parameters the expression actually references.
    pub fn referenced_params(&self) -> Vec<String> {
        match &self.repr {
            Repr::Expr { ast, param_names, .. } => {
                let mut idx = Vec::new();
                ast.referenced_params(&mut idx);
                idx.into_iter().map(|i| param_names[i].clone()).collect()
            }
            Repr::Closure(_) => Vec::new(),
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "field over R^{} evaluated at a point of dimension {}",
                self.dim(),
                got
            )));
        }
        Ok(())
    }

    /// Value at a flat coordinate vector.
    pub fn eval_flat(&self, coords: &[F]) -> Result<F> {
        self.check_dim(coords.len())?;
        match &self.repr {
            Repr::Expr {
                ast, param_values, ..
            } => ast.eval::<F>(self.n, coords, param_values),
            Repr::Closure(f) => f(coords),
        }
    }

    pub fn eval(&self, z: &PhasePoint<F>) -> Result<F> {
        self.eval_flat(z.coords().as_slice())
    }

    /// Gradient `(d/dq_1..d/dq_n, d/dp_1..d/dp_n)`; exact for forward-mode
    /// fields.
    pub fn grad(&self, z: &PhasePoint<F>) -> Result<TangentVector<F>> {
        TangentVector::from_flat(self.grad_flat(z.coords().as_slice())?)
    }

    pub fn grad_flat(&self, coords: &[F]) -> Result<DVector<F>> {
        self.check_dim(coords.len())?;
        match (&self.repr, self.strategy) {
            (
                Repr::Expr {
                    ast, param_values, ..
                },
                DiffStrategy::Forward,
            ) => {
                let dim = coords.len();
                let mut out = DVector::zeros(dim);
                let mut duals: Vec<Dual<F>> = coords.iter().map(|&x| Dual::lift(x)).collect();
                for i in 0..dim {
                    duals[i].der = F::one();
                    out[i] = ast.eval::<Dual<F>>(self.n, &duals, param_values)?.der;
                    duals[i].der = F::zero();
                }
                Ok(out)
            }
            _ => self.grad_fd(coords),
        }
    }

    /// Symmetric `2n x 2n` Hessian; exact (second-order forward
    /// differentiation) for expression-backed fields.
    pub fn hess(&self, z: &PhasePoint<F>) -> Result<DMatrix<F>> {
        self.hess_flat(z.coords().as_slice())
    }

    pub fn hess_flat(&self, coords: &[F]) -> Result<DMatrix<F>> {
        self.check_dim(coords.len())?;
        match (&self.repr, self.strategy) {
            (
                Repr::Expr {
                    ast, param_values, ..
                },
                DiffStrategy::Forward,
            ) => {
                let dim = coords.len();
                let mut out = DMatrix::zeros(dim, dim);
                let mut duals: Vec<Dual<Dual<F>>> =
                    coords.iter().map(|&x| Dual::lift(Dual::lift(x))).collect();
                for i in 0..dim {
                    duals[i].val.der = F::one(); // inner direction e_i
                    for j in i..dim {
                        duals[j].der.val = F::one(); // outer direction e_j
                        let v = ast.eval::<Dual<Dual<F>>>(self.n, &duals, param_values)?;
                        out[(i, j)] = v.der.der;
                        out[(j, i)] = v.der.der;
                        duals[j].der.val = F::zero();
                    }
                    duals[i].val.der = F::zero();
                }
                Ok(out)
            }
            _ => self.hess_fd(coords),
        }
    }

    fn grad_fd(&self, coords: &[F]) -> Result<DVector<F>> {
        let dim = coords.len();
        let cbrt_eps = ComplexField::powf(F::EPSILON, real(1.0 / 3.0));
        let mut out = DVector::zeros(dim);
        let mut work: Vec<F> = coords.to_vec();
        for i in 0..dim {
            let h = cbrt_eps * F::one().max(coords[i].abs());
            work[i] = coords[i] + h;
            let fp = self.eval_raw(&work)?;
            work[i] = coords[i] - h;
            let fm = self.eval_raw(&work)?;
            work[i] = coords[i];
            out[i] = (fp - fm) / (h + h);
        }
        Ok(out)
    }

    fn hess_fd(&self, coords: &[F]) -> Result<DMatrix<F>> {
        let dim = coords.len();
        let quart_eps = ComplexField::powf(F::EPSILON, real(0.25));
        let f0 = self.eval_raw(coords)?;
        let mut out = DMatrix::zeros(dim, dim);
        let mut work: Vec<F> = coords.to_vec();
        let step = |x: F| quart_eps * F::one().max(x.abs());
        for i in 0..dim {
            let hi = step(coords[i]);
            // Diagonal: (f(x+h) - 2 f(x) + f(x-h)) / h^2
            work[i] = coords[i] + hi;
            let fp = self.eval_raw(&work)?;
            work[i] = coords[i] - hi;
            let fm = self.eval_raw(&work)?;
            work[i] = coords[i];
            out[(i, i)] = (fp - f0 - f0 + fm) / (hi * hi);
            for j in i + 1..dim {
                let hj = step(coords[j]);
                let probe = |si: F, sj: F, w: &mut Vec<F>| -> Result<F> {
                    w[i] = coords[i] + si * hi;
                    w[j] = coords[j] + sj * hj;
                    let v = self.eval_raw(w);
                    w[i] = coords[i];
                    w[j] = coords[j];
                    v
                };
                let pp = probe(F::one(), F::one(), &mut work)?;
                let pm = probe(F::one(), -F::one(), &mut work)?;
                let mp = probe(-F::one(), F::one(), &mut work)?;
                let mm = probe(-F::one(), -F::one(), &mut work)?;
                let four = real::<F>(4.0);
                let v = (pp - pm - mp + mm) / (four * hi * hj);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    fn eval_raw(&self, coords: &[F]) -> Result<F> {
        match &self.repr {
            Repr::Expr {
                ast, param_values, ..
            } => ast.eval::<F>(self.n, coords, param_values),
            Repr::Closure(f) => f(coords),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(list: &[(&str, f64)]) -> Vec<(String, f64)> {
        list.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn point(v: &[f64]) -> PhasePoint<f64> {
        PhasePoint::from_slice(v).unwrap()
    }

    #[test]
    fn eval_identity_coordinate() {
        let f = ScalarField::parse("q1", 1, &[]).unwrap();
        assert_eq!(f.eval(&point(&[2.0, 3.0])).unwrap(), 2.0);
    }

    #[test]
    fn eval_harmonic() {
        let f = ScalarField::parse("(q1^2 + p1^2)/2", 1, &[]).unwrap();
        assert_eq!(f.eval(&point(&[1.0, 0.0])).unwrap(), 0.5);
    }

    #[test]
    fn eval_double_well_at_bottom() {
        let f = ScalarField::parse("p1^2/2 + (q1^2 - 1)^2/4", 1, &[]).unwrap();
        assert_eq!(f.eval(&point(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn eval_bifurcation_field() {
        // F1 at (q=(1,0), p=(0.3,0.5)) with eps = 0: 0.3^2/2 + 0.5/2 = 0.295.
        let f = ScalarField::parse(
            "p1^2/2 + p2*q1^2/2 - eps*q1",
            2,
            &params(&[("eps", 0.0)]),
        )
        .unwrap();
        let v = f.eval(&point(&[1.0, 0.0, 0.3, 0.5])).unwrap();
        assert!((v - 0.295).abs() < 1e-15);

        // Parameter binding shifts the value by -eps*q1.
        let g = ScalarField::parse(
            "p1^2/2 + p2*q1^2/2 - eps*q1",
            2,
            &params(&[("eps", 0.1)]),
        )
        .unwrap();
        let w = g.eval(&point(&[1.0, 0.0, 0.3, 0.5])).unwrap();
        assert!((w - 0.195).abs() < 1e-15);
    }

    #[test]
    fn parsed_field_matches_closed_form_everywhere() {
        // The parsed expression agrees with a hand-coded closure (values and
        // gradients) across the sampling box.
        let eps = 0.1;
        let f = ScalarField::parse(
            "p1^2/2 + p2*q1^2/2 - eps*q1",
            2,
            &params(&[("eps", eps)]),
        )
        .unwrap();
        let closed = |q1: f64, p1: f64, p2: f64| p1 * p1 / 2.0 + p2 * q1 * q1 / 2.0 - eps * q1;
        for v in crate::sample::halton_box::<f64>(25, 4, -2.0, 2.0) {
            let z = PhasePoint::from_flat(v).unwrap();
            let (q1, p1, p2) = (z.q(0), z.p(0), z.p(1));
            assert!((f.eval(&z).unwrap() - closed(q1, p1, p2)).abs() < 1e-14);
            let g = f.grad(&z).unwrap();
            let expect = [p2 * q1 - eps, 0.0, p1, q1 * q1 / 2.0];
            for (a, b) in g.coords().iter().zip(expect.iter()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn division_by_zero_reports_node() {
        let f = ScalarField::parse("1/q1", 1, &[]).unwrap();
        let err = f.eval(&point(&[0.0, 1.0])).unwrap_err();
        match err {
            Error::Domain { expr, .. } => assert!(expr.contains("1/q1"), "expr was {expr}"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn log_domain_error() {
        let f = ScalarField::parse("log(q1)", 1, &[]).unwrap();
        assert!(f.eval(&point(&[-1.0, 0.0])).is_err());
        assert!(f.eval(&point(&[1.0, 0.0])).unwrap().abs() < 1e-15);
    }

    #[test]
    fn grad_harmonic() {
        let f = ScalarField::parse("(q1^2 + p1^2)/2", 1, &[]).unwrap();
        let g = f.grad(&point(&[1.0, 0.0])).unwrap();
        assert_eq!(g.coords().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn grad_bifurcation_hand_values() {
        // eps=0 at (q=(1,0), p=(0.3,0.5)): (p2*q1, 0, p1, q1^2/2) = (0.5, 0, 0.3, 0.5).
        let f = ScalarField::parse("p1^2/2 + p2*q1^2/2", 2, &[]).unwrap();
        let g = f.grad(&point(&[1.0, 0.0, 0.3, 0.5])).unwrap();
        let expect = [0.5, 0.0, 0.3, 0.5];
        for (a, b) in g.coords().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hess_harmonic_is_identity() {
        let f = ScalarField::parse("(q1^2 + p1^2)/2", 1, &[]).unwrap();
        let h = f.hess(&point(&[0.7, -0.2])).unwrap();
        assert_eq!(h, DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn hess_bifurcation_hand_values() {
        // eps=0 at (q=(1,0), p=(0,-1)): d2/dq1dq1 = p2 = -1, d2/dp1dp1 = 1,
        // d2/dq1dp2 = q1 = 1, symmetric, all else zero.
        let f = ScalarField::parse("p1^2/2 + p2*q1^2/2", 2, &[]).unwrap();
        let h = f.hess(&point(&[1.0, 0.0, 0.0, -1.0])).unwrap();
        let mut expect = DMatrix::<f64>::zeros(4, 4);
        expect[(0, 0)] = -1.0;
        expect[(2, 2)] = 1.0;
        expect[(0, 3)] = 1.0;
        expect[(3, 0)] = 1.0;
        assert_eq!(h, expect);
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let f = ScalarField::parse("sin(q1*p2) + exp(q2/2)*p1^3", 2, &[]).unwrap();
        let h = f.hess(&point(&[0.3, -0.8, 1.2, 0.4])).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }

    #[test]
    fn forward_matches_finite_differences() {
        // Spec tolerance: 1e-6 relative on gradients, 1e-4 on Hessians.
        let sources = [
            "p1^2/2 + p2*q1^2/2 - 0.1*q1",
            "q1^3*p2 - q2^2*p1 + q1*q2*p1*p2",
            "sin(q1)*cos(p2) + exp(q2*p1/4)",
        ];
        let pts = crate::sample::halton_box::<f64>(20, 4, -1.0, 1.0);
        for src in sources {
            let ad = ScalarField::parse(src, 2, &[]).unwrap();
            let fd = ad.clone().with_finite_differences();
            for raw in &pts {
                let z = PhasePoint::from_flat(raw.clone()).unwrap();
                let ga = ad.grad(&z).unwrap();
                let gf = fd.grad(&z).unwrap();
                let scale = 1.0f64.max(ga.coords().norm());
                assert!(
                    (ga.coords() - gf.coords()).norm() / scale < 1e-6,
                    "gradient mismatch for {src}"
                );
                let ha = ad.hess(&z).unwrap();
                let hf = fd.hess(&z).unwrap();
                let hscale = 1.0f64.max(ha.norm());
                assert!(
                    (&ha - &hf).norm() / hscale < 1e-4,
                    "hessian mismatch for {src}"
                );
            }
        }
    }

    #[test]
    fn closure_fields_use_finite_differences() {
        let f = ScalarField::from_fn(1, |z: &[f64]| Ok(0.5 * (z[0] * z[0] + z[1] * z[1])));
        assert_eq!(f.strategy(), DiffStrategy::FiniteDifference);
        let g = f.grad(&point(&[1.0, 0.5])).unwrap();
        assert!((g.q(0) - 1.0).abs() < 1e-9);
        assert!((g.p(0) - 0.5).abs() < 1e-9);
        let h = f.hess(&point(&[1.0, 0.5])).unwrap();
        assert!((h[(0, 0)] - 1.0).abs() < 1e-6);
        assert!((h[(0, 1)]).abs() < 1e-6);
    }

    #[test]
    fn round_trip_pretty_print() {
        let names = params(&[("eps", 0.25)]);
        let sources = [
            "p1^2/2 + p2*q1^2/2 - eps*q1",
            "-(q1 + p1)^3/8",
            "q1 - p1 - 1",
            "sin(q1)*sqrt(p1^2 + 1) - 2e-3",
            "q1^-2 + p1^0.5",
            "q1/(p1/(q1 + 1))",
        ];
        for src in sources {
            let f = ScalarField::parse(src, 2, &names).unwrap();
            let printed = f.source().unwrap();
            let g = ScalarField::parse(&printed, 2, &names).unwrap();
            assert_eq!(
                format!("{f:?}"),
                format!("{g:?}"),
                "round trip failed: {src} -> {printed}"
            );
        }
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            use ast::{BinOp, Expr, FuncOp, VarRef};
            let leaf = prop_oneof![
                (0.0f64..4.0).prop_map(Expr::Number),
                Just(Expr::Var(VarRef::Q(0))),
                Just(Expr::Var(VarRef::P(0))),
            ];
            leaf.prop_recursive(4, 24, 3, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone(), prop_oneof![
                        Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)
                    ])
                        .prop_map(|(a, b, op)| Expr::Bin(op, Box::new(a), Box::new(b))),
                    inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                    (inner.clone(), -3i32..4).prop_map(|(e, k)| Expr::PowInt(Box::new(e), k)),
                    (inner, prop_oneof![Just(FuncOp::Sin), Just(FuncOp::Cos), Just(FuncOp::Exp)])
                        .prop_map(|(e, f)| Expr::Func(f, Box::new(e))),
                ]
            })
        }

        proptest! {
            #[test]
            fn print_parse_round_trip(e in arb_expr()) {
                // One print/parse pass canonicalizes incidental forms the
                // parser never produces (e.g. Neg of a literal); after that
                // the cycle must be the identity.
                let ctx = VarContext { n: 1, param_names: &[] };
                let canonical = parser::parse(&e.fold_powers().to_source(&[]), &ctx).unwrap();
                let printed = canonical.to_source(&[]);
                let reparsed = parser::parse(&printed, &ctx).unwrap();
                prop_assert_eq!(canonical, reparsed, "printed form: {}", printed);
            }
        }
    }
}
