//! Numerical laboratory for quantum diffraction at planar slits through
//! ε-regularized Schrödinger problems `∂_t u = iΔu − iV_ε u`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod born;
pub mod dump;
pub mod error;
pub mod field;
pub mod propagate;
pub mod quad;
pub mod reference;
pub mod regularize;
pub mod verify;

pub use error::{Error, Result};
