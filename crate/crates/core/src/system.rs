//! Integrable systems: `n` scalar fields in involution plus a Hamiltonian
//! combination, Poisson brackets, Hamiltonian vector fields, and the complex
//! matrix `M(z)` whose determinant cuts out the singular set.

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::linalg::{self, complex_det};
use crate::sample::halton_box;
use crate::scalar::{real, Real};
use crate::symplectic::{apply_j, PhasePoint, TangentVector};
use nalgebra::{Complex, DMatrix, DVector};

/// Default involution gate: sample count, box half-width and tolerance.
pub const INVOLUTION_SAMPLES: usize = 64;
pub const INVOLUTION_BOX: f64 = 1.0;
pub const INVOLUTION_TOL: f64 = 1e-8;

/// The Hamiltonian expressed through the integrals: either `H = F_1` or a
/// linear combination `H = sum w_a F_a`.
#[derive(Clone, Debug)]
pub enum Hamiltonian<F> {
    FirstField,
    Weights(Vec<F>),
}

impl<F: Real> Hamiltonian<F> {
    /// `dh/dF_a` evaluated for this combination.
    pub fn weight(&self, alpha: usize) -> F {
        match self {
            Hamiltonian::FirstField => {
                if alpha == 0 {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Hamiltonian::Weights(w) => w[alpha],
        }
    }

    pub fn weights(&self, n: usize) -> Vec<F> {
        (0..n).map(|a| self.weight(a)).collect()
    }
}

/// `n` commuting scalar fields `F_1..F_n` with a Hamiltonian combination.
/// The constructor validates involution by sampling and refuses to build a
/// system whose brackets do not vanish.
#[derive(Clone, Debug)]
pub struct IntegrableSystem<F> {
    fields: Vec<ScalarField<F>>,
    hamiltonian: Hamiltonian<F>,
    label: String,
}

/// Outcome of an involution check over a sample set.
#[derive(Clone, Debug)]
pub struct InvolutionReport {
    pub max_bracket: f64,
    pub worst_pair: (usize, usize),
    pub worst_sample: usize,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
}

impl<F: Real> IntegrableSystem<F> {
    /// Build with the default involution gate (64 quasi-random points in
    /// `[-1, 1]^{2n}`, tolerance 1e-8).
    pub fn new(
        fields: Vec<ScalarField<F>>,
        hamiltonian: Hamiltonian<F>,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::with_involution_box(fields, hamiltonian, label, INVOLUTION_BOX)
    }

    /// Build, sampling the involution check inside `[-half_width, half_width]^{2n}`.
    pub fn with_involution_box(
        fields: Vec<ScalarField<F>>,
        hamiltonian: Hamiltonian<F>,
        label: impl Into<String>,
        half_width: f64,
    ) -> Result<Self> {
        let sys = Self::new_unvalidated(fields, hamiltonian, label)?;
        let pts: Vec<PhasePoint<F>> =
            halton_box::<F>(INVOLUTION_SAMPLES, sys.dim(), -half_width, half_width)
                .into_iter()
                .map(|v| PhasePoint::from_flat(v).expect("even dimension"))
                .collect();
        let report = sys.check_involution(&pts, real(INVOLUTION_TOL))?;
        if !report.pass {
            return Err(Error::InvolutionFailed {
                f: report.worst_pair.0,
                g: report.worst_pair.1,
                max: report.max_bracket,
                tol: report.tol,
                sample: report.worst_sample,
            });
        }
        Ok(sys)
    }

    fn new_unvalidated(
        fields: Vec<ScalarField<F>>,
        hamiltonian: Hamiltonian<F>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Invalid("a system needs at least one field".into()));
        }
        let n = fields.len();
        for (i, f) in fields.iter().enumerate() {
            if f.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "field {i} is defined over R^{} but the system has n = {n} freedoms",
                    f.dim()
                )));
            }
        }
        if let Hamiltonian::Weights(w) = &hamiltonian {
            if w.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "hamiltonian weights have length {}, expected {n}",
                    w.len()
                )));
            }
        }
        Ok(IntegrableSystem {
            fields,
            hamiltonian,
            label: label.into(),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.fields.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.fields.len()
    }

    #[inline]
    pub fn fields(&self) -> &[ScalarField<F>] {
        &self.fields
    }

    #[inline]
    pub fn field(&self, alpha: usize) -> &ScalarField<F> {
        &self.fields[alpha]
    }

    #[inline]
    pub fn hamiltonian(&self) -> &Hamiltonian<F> {
        &self.hamiltonian
    }

    pub fn with_hamiltonian(mut self, h: Hamiltonian<F>) -> Result<Self> {
        if let Hamiltonian::Weights(w) = &h {
            if w.len() != self.n() {
                return Err(Error::DimensionMismatch(format!(
                    "hamiltonian weights have length {}, expected {}",
                    w.len(),
                    self.n()
                )));
            }
        }
        self.hamiltonian = h;
        Ok(self)
    }

    #[inline]
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Gradient of the Hamiltonian combination at `z`.
    pub fn hamiltonian_gradient(&self, z: &PhasePoint<F>) -> Result<DVector<F>> {
        let mut g = DVector::zeros(self.dim());
        for (alpha, f) in self.fields.iter().enumerate() {
            let w = self.hamiltonian.weight(alpha);
            if w != F::zero() {
                g += f.grad_flat(z.coords().as_slice())? * w;
            }
        }
        Ok(g)
    }

    /// Hessian of the Hamiltonian combination at `z`.
    pub fn hamiltonian_hessian(&self, z: &PhasePoint<F>) -> Result<DMatrix<F>> {
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for (alpha, f) in self.fields.iter().enumerate() {
            let w = self.hamiltonian.weight(alpha);
            if w != F::zero() {
                h += f.hess_flat(z.coords().as_slice())? * w;
            }
        }
        Ok(h)
    }

    /// Max of `|{F_a, F_b}|` over all pairs and samples.
    pub fn check_involution(
        &self,
        samples: &[PhasePoint<F>],
        tol: F,
    ) -> Result<InvolutionReport> {
        if samples.is_empty() {
            return Err(Error::Invalid("involution check needs samples".into()));
        }
        let mut max_bracket = F::zero();
        let mut worst_pair = (0, 0);
        let mut worst_sample = 0;
        for (k, z) in samples.iter().enumerate() {
            // Gradients once per sample, brackets for every pair.
            let grads: Vec<DVector<F>> = self
                .fields
                .iter()
                .map(|f| f.grad_flat(z.coords().as_slice()))
                .collect::<Result<_>>()
                .map_err(|e| match e {
                    Error::Domain { expr, msg } => Error::Domain {
                        expr,
                        msg: format!("{msg} (involution sample {k})"),
                    },
                    other => other,
                })?;
            for a in 0..self.n() {
                for b in a + 1..self.n() {
                    let bracket = grads[a].dot(&apply_j(&grads[b])).abs();
                    if bracket > max_bracket {
                        max_bracket = bracket;
                        worst_pair = (a, b);
                        worst_sample = k;
                    }
                }
            }
        }
        Ok(InvolutionReport {
            max_bracket: max_bracket.to_f64().unwrap_or(f64::NAN),
            worst_pair,
            worst_sample,
            samples: samples.len(),
            tol: tol.to_f64().unwrap_or(f64::NAN),
            pass: max_bracket <= tol,
        })
    }

    /// Stack of gradients, row `a` is `grad F_a(z)`.
    pub fn gradient_stack(&self, z: &PhasePoint<F>) -> Result<DMatrix<F>> {
        let n = self.n();
        let mut stack = DMatrix::zeros(n, 2 * n);
        for (a, f) in self.fields.iter().enumerate() {
            let g = f.grad_flat(z.coords().as_slice())?;
            stack.row_mut(a).copy_from(&g.transpose());
        }
        Ok(stack)
    }

    /// The complex matrix `M_{ab} = dF_b/dp_a + i dF_b/dq_a`.
    pub fn m_matrix(&self, z: &PhasePoint<F>) -> Result<DMatrix<Complex<F>>> {
        let n = self.n();
        let mut m = DMatrix::from_element(n, n, Complex::new(F::zero(), F::zero()));
        for (b, f) in self.fields.iter().enumerate() {
            let g = f.grad_flat(z.coords().as_slice())?;
            for a in 0..n {
                m[(a, b)] = Complex::new(g[n + a], g[a]);
            }
        }
        Ok(m)
    }

    /// `det M(z)` by LU with partial pivoting.
    pub fn det_m(&self, z: &PhasePoint<F>) -> Result<Complex<F>> {
        Ok(complex_det(&self.m_matrix(z)?))
    }

    /// Singular values of the real gradient stack and of `M`, both sorted
    /// descending. Exposed for corank cross-checks.
    pub fn corank_singular_values(&self, z: &PhasePoint<F>) -> Result<(Vec<F>, Vec<F>)> {
        let stack_sv = linalg::singular_values(&self.gradient_stack(z)?);
        let m = self.m_matrix(z)?;
        let m_svd = m.svd(false, false);
        let mut m_sv: Vec<F> = m_svd.singular_values.iter().copied().collect();
        m_sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok((stack_sv, m_sv))
    }
}

/// Poisson bracket `{f, g}(z) = grad f . J . grad g`.
pub fn poisson_bracket<F: Real>(
    f: &ScalarField<F>,
    g: &ScalarField<F>,
    z: &PhasePoint<F>,
) -> Result<F> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "bracket of fields over R^{} and R^{}",
            f.dim(),
            g.dim()
        )));
    }
    let gf = f.grad_flat(z.coords().as_slice())?;
    let gg = g.grad_flat(z.coords().as_slice())?;
    Ok(gf.dot(&apply_j(&gg)))
}

/// Hamiltonian vector field `xi = J grad f`, i.e. `(df/dp, -df/dq)`.
pub fn hamiltonian_vector_field<F: Real>(
    f: &ScalarField<F>,
    z: &PhasePoint<F>,
) -> Result<TangentVector<F>> {
    let g = f.grad_flat(z.coords().as_slice())?;
    TangentVector::from_flat(apply_j(&g))
}
