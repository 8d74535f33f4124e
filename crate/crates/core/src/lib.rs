//! Krotov-family optimal control for open quantum systems.
//!
//! The crate works in Liouville space: density matrices are column-stacked
//! into vectors and the Lindblad generator becomes a dense `d² × d²` matrix
//! `A(ξ)` with `i d|ψ⟩⟩/dt = A(ξ)|ψ⟩⟩`. On top of that it provides
//!
//! - [`liouville`]: vectorization, inner products and superoperator builders,
//! - [`dynamics`]: forward state and backward costate propagation, plus a
//!   direct density-matrix integrator used as an oracle,
//! - [`optimizer`]: the two-parameter `(δ, η)` family of monotonically
//!   convergent iterations for open and closed systems, the `ΔJ`
//!   decomposition diagnostic and the quantum speed limit,
//! - [`thermal`]: the thermal (generalized amplitude damping) qubit model,
//!   Bloch-vector tools, the ε-free time and the thermalization speedup
//!   experiment.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod liouville;
pub mod optimizer;
pub mod thermal;

mod error;

pub use error::{Error, Result};

/// Crate version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use nalgebra::Complex;
pub use nalgebra::{DMatrix, DVector};

/// Complex scalar used throughout the crate.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;
