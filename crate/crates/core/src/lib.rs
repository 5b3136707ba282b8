#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod decomposition;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};
