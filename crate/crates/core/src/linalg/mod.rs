//! Dense matrices and state-space realizations.

mod matrix;
mod ss;

pub use matrix::{Lu, Matrix};
pub use ss::{
    balanced_inner, first_order_inner, h2_norm_sq, h2_norm_sq_gramian, inverse_realization,
    ratfn_of_matrix, realize, spectral_radius_bound, stein_solve, StateSpace,
};
