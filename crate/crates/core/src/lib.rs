//! Exact enumeration of three-choice polygons by perimeter, discovery and
//! verification of the Fuchsian ODE annihilating their generating function,
//! singularity analysis of that ODE, and high-precision fitting of the
//! asymptotic amplitudes of the coefficient sequence.
//!
//! The pipeline runs in stages, one module each:
//!
//! * [`exactarith`] — word-size prime fields, CRT, rational reconstruction,
//!   and decimal-precision real arithmetic.
//! * [`enumerate`] — transfer-matrix enumeration of staircase and imperfect
//!   staircase polygons, plus a brute-force oracle.
//! * [`odefit`] — modular search for an annihilating linear ODE with
//!   polynomial coefficients, with integer lifting.
//! * [`holonomic`] — ODE ⇄ recurrence conversion and series extension in
//!   exact, modular, or real arithmetic.
//! * [`singular`] — singular points, indicial exponents, Fuchsian sum,
//!   apparent-singularity detection, local Frobenius bases.
//! * [`asympt`] — amplitude fitting of the normalized coefficients with
//!   stability, absence, and constant-recognition diagnostics.

pub mod asympt;
pub mod enumerate;
pub mod error;
pub mod exactarith;
pub mod holonomic;
pub mod odefit;
pub mod par;
pub mod poly;
pub mod singular;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
