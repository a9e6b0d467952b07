//! Sesquilinear forms on finite-dimensional Galerkin spaces.
//!
//! A [`formmodel::FormTriple`] bundles a form matrix with the Gram matrices of
//! the form domain `V` and the pivot space `H` and the embedding `j: V -> H`.
//! From it the crate builds the associated operator, the numerical range,
//! coercivity constants and finite-rank defect data, and analyses the
//! semigroup `exp(-zA)` (growth bounds, spectral splits, essential growth
//! surrogates, Lyapunov renormings).
//!
//! Coordinate convention used throughout: `form[(k, l)] = a(phi_l, phi_k)`,
//! so `a(u, v) = v* F u` for coordinate vectors `u`, `v`.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod coercivity;
pub mod error;
pub mod formmodel;
pub mod gallery;
pub mod numkernel;
pub mod numrange;
pub mod sampling;
pub mod semigroup;

pub use error::{Error, Result};
pub use numkernel::{CMatrix, CVector, C64};
