#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod mcsim;
pub mod ratfun;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Poly = ratfun::Polynomial<f64>;
pub type RatFn = ratfun::RationalFunction<f64>;
pub type Mat = linalg::Matrix<f64>;
pub type SS = linalg::StateSpace<f64>;
