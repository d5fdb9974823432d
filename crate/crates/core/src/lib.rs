//! Ridge leverage score sampling and fast regularized Tucker decomposition.

// `!(x >= 0.0)` rejects NaN as well; index loops mirror the textbook recurrences
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod als;
pub mod error;
pub mod kronecker;
pub mod leverage;
pub mod linalg;
pub mod missing;
pub mod rng;
pub mod sampler;
pub mod sketch;
pub mod synthetic;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
