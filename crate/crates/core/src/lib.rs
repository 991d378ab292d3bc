#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` is how NaN gets rejected

pub mod boundary;
pub mod cli;
pub mod disk;
pub mod error;
pub mod inner;
pub mod linalg;
pub mod model;
pub mod nearly;
pub mod probe;
pub mod toeplitz;

pub use error::{Error, Result};
