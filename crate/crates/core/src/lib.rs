//! Maslov indices and nondegenerate singularities of integrable Hamiltonian
//! systems on cartesian phase space.
//!
//! The toolkit bundles:
//! - symplectic linear algebra on `R^{2n}` ([`symplectic`]),
//! - an expression DSL with exact forward-mode differentiation ([`expr`]),
//! - integrable-system assembly, Poisson brackets and the complex matrix
//!   `M(z)` whose determinant vanishes on the singular set ([`system`]),
//! - detection and classification of corank-one singularities
//!   ([`singularity`]),
//! - Maslov indices of closed curves by adaptive unwrapping of `arg det M`,
//!   with the singularity-sum cross-check ([`winding`]),
//! - Hamiltonian flows, variational equations and transverse Liapunov
//!   exponents of singular tori ([`dynamics`]),
//! - example systems with known analytic structure ([`gallery`]),
//! - a self-verification suite reproducing the known index and exponent
//!   values ([`verify`]).
//!
//! Core types are generic over the floating scalar through [`scalar::Real`];
//! the aliases below pin the `f64` instantiation used by the CLI and tests.

pub mod dual;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod gallery;
pub mod linalg;
pub mod ode;
pub mod sample;
pub mod scalar;
pub mod singularity;
pub mod symplectic;
pub mod system;
pub mod verify;
pub mod winding;

pub use error::{Error, ErrorKind, Result};
pub use scalar::{DiffScalar, Real};

/// `f64` instantiations of the core types.
pub type Point = symplectic::PhasePoint<f64>;
pub type Tangent = symplectic::TangentVector<f64>;
pub type Field = expr::ScalarField<f64>;
pub type System = system::IntegrableSystem<f64>;
pub type Curve = winding::ClosedCurve<f64>;
pub type Disk = winding::TransverseDisk<f64>;
pub type MaslovResult = winding::MaslovResult<f64>;
pub type SingularityData = singularity::SingularityData<f64>;
pub type LiapunovReport = dynamics::LiapunovReport<f64>;
