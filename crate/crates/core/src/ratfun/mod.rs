//! Polynomials and rational functions in the backward-shift variable.

mod poly;
mod ratfn;
mod roots;

pub use poly::Polynomial;
pub use ratfn::{Classification, RationalFunction, Verdict};
pub use roots::{RootLocation, RootSet};
