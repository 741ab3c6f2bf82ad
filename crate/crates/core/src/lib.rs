//! Finite-dimensional laboratory for contractions on Banach spaces.
//!
//! Spaces are weighted `l_p^n`, 2-direct sums, truncations of `l_2(X)` and
//! `l_2(Z, X)`, a sampled disk-algebra sup norm, and spaces renormed by the
//! functional `A_T(x) = (|x|^2 - |Tx|^2)^(1/2)`. On top of those the crate
//! provides Birkhoff-James orthogonality tests, support functionals, operator
//! norms, isometric dilations, shifts and Wold-type decompositions.
//!
//! Every randomized procedure takes an explicit seed.

pub mod certificate;
pub mod decomposition;
pub mod dilation;
pub mod error;
pub mod functionals;
pub mod linalg;
pub mod operators;
pub mod optim;
pub mod orthogonality;
pub mod serde_util;
pub mod shifts;
pub mod spaces;
pub mod subspace;

pub use certificate::{Certificate, Verdict};
pub use error::{Error, Result};
pub use operators::{Annotation, Operator};
pub use spaces::{Exponent, Space, Vector};
pub use subspace::Subspace;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;

/// Shorthand for a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
