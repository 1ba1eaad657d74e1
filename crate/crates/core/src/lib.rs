// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cumulant;
pub mod error;
pub mod harness;
pub mod model;
pub mod motion;
pub mod ode;
pub mod quantum;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
