//! Numerical laboratory for the non-regularity of the diffeomorphism group of
//! the open unit interval.
//!
//! The crate builds the mollified-translation family `c_t`, checks that it is
//! a smooth path of diffeomorphisms through the identity with constant
//! velocity 1, and shows that this constant velocity field does not
//! integrate inside the group: its flow `x ↦ x + t` leaves the interval in
//! finite time. The same field, transplanted along a closed embedding of the
//! interval into the plane, blows up in finite time.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cli;
pub mod diffeo;
pub mod error;
pub mod expr;
pub mod family;
pub mod flow;
pub mod manifold;
pub mod mollifier;
pub mod quadrature;
pub mod seminorm;
pub mod svg;

pub use error::{Error, Result};
