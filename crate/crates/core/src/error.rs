//! Crate-wide error type. Every failure carries enough context to be
//! reported verbatim by the CLI; [`ErrorKind`] separates configuration and
//! build failures from numerical-quality failures for exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: syntax, unknown names, dimension mismatches, systems that
    /// fail the involution gate.
    Build,
    /// The computation ran but could not meet its quality contract.
    Quality,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("syntax error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("domain error in `{expr}`: {msg}")]
    Domain { expr: String, msg: String },

    #[error("non-finite value produced by `{context}`")]
    NonFinite { context: String },

    #[error(
        "involution check failed for ({f}, {g}): max |{{F_a,F_b}}| = {max:.3e} exceeds {tol:.3e} at sample {sample}"
    )]
    InvolutionFailed {
        f: usize,
        g: usize,
        max: f64,
        tol: f64,
        sample: usize,
    },

    #[error("corank estimates disagree: gradient stack gives {grad_stack}, M gives {m_matrix}")]
    CorankAmbiguous { grad_stack: usize, m_matrix: usize },

    #[error("point has corank {found}, expected corank 1")]
    NotCorankOne { found: usize },

    #[error("singularity is degenerate: |tau| = {tau:.3e} within tolerance {tol:.3e}")]
    DegenerateSingularity { tau: f64, tol: f64 },

    #[error("transverse split failed: rank of K^2 is {rank}, expected 2")]
    SplitRank { rank: usize },

    #[error("curve passes within the singular-proximity threshold of Sigma at s = {s} (|det M| = {det_abs:.3e}, threshold {threshold:.3e})")]
    CurveHitsSingularSet {
        s: f64,
        det_abs: f64,
        threshold: f64,
    },

    #[error("phase step unresolvable near s = {s}: refinement depth {depth} exhausted")]
    PhaseUnresolvable { s: f64, depth: usize },

    #[error("winding inconsistent: raw phase increment {raw}/pi rounds to {rounded} with residual {residual:.3e}")]
    WindingInconsistent {
        raw: f64,
        rounded: i64,
        residual: f64,
    },

    #[error("curve is not closed: ||z(1) - z(0)|| = {gap:.3e} exceeds {tol:.3e}")]
    CurveNotClosed { gap: f64, tol: f64 },

    #[error("tangent projections onto im K^2 are linearly dependent ([u*,v*] = {product:.3e})")]
    DegenerateProjection { product: f64 },

    #[error("Newton iteration did not converge within {iters} iterations (|det M| = {det_abs:.3e})")]
    NoConvergence { iters: usize, det_abs: f64 },

    #[error("step size underflow at t = {t:.6e}")]
    StepSizeUnderflow { t: f64 },

    #[error("integration quality: invariant F_{index} drifted by {drift:.3e}, tolerance {tol:.3e}")]
    InvariantDrift { index: usize, drift: f64, tol: f64 },

    #[error("integration quality: symplecticity drift {drift:.3e} exceeds {tol:.3e}")]
    SymplecticityDrift { drift: f64, tol: f64 },

    #[error("orbit left the bounded safety region (||z|| = {norm:.3e} > {radius:.3e})")]
    UnboundedOrbit { norm: f64, radius: f64 },

    #[error("ergodic average did not settle: last window change {delta:.3e} exceeds {tol:.3e}")]
    AveragingDiverged { delta: f64, tol: f64 },

    #[error("point is not hyperbolic: tau = {tau:.3e}")]
    NotHyperbolic { tau: f64 },

    #[error("projector is not rank one (Tr Q^T Q = {norm:.3e})")]
    ProjectorRank { norm: f64 },

    #[error("ambiguous rotational classification: point matches {matches:?}")]
    AmbiguousClassification { matches: Vec<String> },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DimensionMismatch(_)
            | Error::Parse { .. }
            | Error::UnknownIdentifier { .. }
            | Error::InvolutionFailed { .. }
            | Error::Invalid(_) => ErrorKind::Build,
            _ => ErrorKind::Quality,
        }
    }
}
