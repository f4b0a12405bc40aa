#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity, clippy::result_large_err)]

pub mod algebra;
pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod noise;
pub mod sphere;

pub use error::{Error, Result};
