//! Positive curves in flag varieties, the symmetric space `Y_d` of
//! `PGL_d(ℝ)`, and discrete harmonic maps `ℍ² → Y_d` with stability
//! certificates.
//!
//! Everything except [`hyp2::gamma_integral`] works without `std`; the
//! dimension `d` is a const parameter so the hot paths stay on the stack.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is deliberate throughout: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod curves;
pub mod embedding;
mod error;
pub mod flags;
pub mod harmonic;
pub mod hyp2;
pub mod linalg;
pub mod spd;
pub mod stability;

pub use error::{Error, Result};
