//! Certified feedback-entropy bounds for data-rate-limited control: plants,
//! reachability certificates, entropy estimates, coder-controllers and a
//! closed-loop simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod plant;
pub mod reach;
pub mod simloop;

pub use error::{Error, Result};
