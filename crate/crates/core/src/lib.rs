#![no_std]
// `!(err <= tol)` is deliberate: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

// Float methods come from `num_traits::Float`. The import is unused whenever
// std is linked elsewhere in the graph, since std's inherent methods win.

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod family;
pub mod latent;
pub mod linalg;
pub mod math;
pub mod nef;
pub mod quad;
pub mod residue;
pub mod rf;
pub mod series;
pub mod validate;

pub use error::{Error, Result};
pub use num_complex::Complex64;
