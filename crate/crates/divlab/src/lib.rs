//! Verification toolkit for fractal Schrodinger-convergence counterexamples.
//!
//! * [`exponents`]: exact closed forms for regularity exponents and dimensions.
//! * [`optimizer`]: brute-force oracle re-deriving those closed forms.
//! * [`numbertheory`]: sieves, Gauss sums and index counting.
//! * [`evolution`]: finite-scale evaluation of the evolved initial datum.
//! * [`slabs`]: slab geometry, box counting and ubiquity measures.

// Error types carry exact rationals for diagnostics; `!(a < b)` guards reject NaN.
#![allow(clippy::result_large_err, clippy::neg_cmp_op_on_partial_ord)]

pub mod evolution;
pub mod exponents;
pub mod fit;
pub mod numbertheory;
pub mod optimizer;
pub mod rational;
pub mod slabs;

pub use rational::{rat, ExactRational};
