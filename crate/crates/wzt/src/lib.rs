//! Exact verification toolkit for hypergeometric generator/certificate pairs
//! and the Ramanujan-type series they produce.
//!
//! - [`exact`]: arbitrary-precision rationals, bivariate polynomials, and
//!   rational functions with structural (cross-multiplied) equality.
//! - [`bigfloat`]: binary floating point on big integers with directed
//!   rounding error bounds and independently cross-checked constant oracles.
//! - [`term`]: the typed factor model for proper hypergeometric terms in
//!   (n, k) and exact shift-ratio computation.
//! - [`analysis`]: series summation with certified tail bounds, plus
//!   acceleration for the conditionally convergent entries.
//! - [`wz`]: certificate checking, telescoping, sum invariance in k, and the
//!   second-order generator construction.
//! - [`catalog`]: the builtin formula table and its JSON interchange format.
//! - [`discovery`]: PSLQ integer-relation detection and the exponent-template
//!   sweep that rediscovers a catalog row from numerics alone.
//! - [`cli`]: the command-line front-end binding all of the above.

pub mod analysis;
pub mod bigfloat;
pub mod catalog;
pub mod cli;
pub mod discovery;
pub mod exact;
pub mod term;
pub mod wz;
