//! Exact computations with elliptic normal curves over large prime fields.
//!
//! The core objects are the ideal of the secant variety of an elliptic normal
//! curve `C ⊂ P^{n-1}`, the quadratic Poisson matrix `Ω` whose Casimirs are
//! its equations, and (for odd `n`) the Cremona transformation built from the
//! pfaffians of the Klein matrix `Φ` together with its inverse.
//!
//! All algebra is generic over [`Field`]; the aliases below fix the scalar
//! types used by the pipeline.

pub mod cremona;
pub mod curve;
pub mod error;
pub mod field;
pub mod interpolate;
pub mod json;
pub mod linalg;
pub mod pfaffian;
pub mod pipeline;
pub mod poisson;
pub mod poly;
pub mod skew;
pub mod szego;

pub use error::{Error, Result};
pub use field::{DynPrime, Field, Fp, Mersenne61, PrimeField, Prime62};
pub use linalg::{Echelon, Matrix};
pub use poly::{Monomial, MultiPoly, PolyMap};

/// Arithmetic modulo `2^61 - 1`, the default prime.
pub type Fp61 = Fp<Mersenne61>;
/// Arithmetic modulo `2^62 - 57`, used for cross-prime checks.
pub type Fp62 = Fp<Prime62>;
/// Arithmetic modulo a prime chosen at run time.
pub type FpDyn = Fp<DynPrime>;
/// Exact rationals, handy for small oracle computations.
pub type Rational = num_rational::Ratio<i128>;
/// Polynomials over the default field.
pub type Poly = MultiPoly<Fp61>;
