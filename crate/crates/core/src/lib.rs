// Negated comparisons reject NaN on purpose; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod numkit;
pub mod spectra;
pub mod transfer;

pub use error::{Error, Result};
