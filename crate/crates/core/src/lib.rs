#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision, clippy::too_many_arguments)]

pub mod classify;
pub mod error;
pub mod fields;
pub mod greens;
pub mod multipole;
pub mod quadrature;
pub mod sources;
pub mod specialfuncs;
pub mod vector;

pub use error::{Error, Result};
