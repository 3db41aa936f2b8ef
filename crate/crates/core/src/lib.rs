//! Plurisubharmonic functions and exhaustions on tube-type and Siegel-type
//! domains attached to Hermitian Lie algebras of real rank `r`.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod approx;
pub mod coords;
pub mod domains;
pub mod error;
pub mod levi;
pub mod linalg;
pub mod potential;
pub mod report;
pub mod siegel;
pub mod verify;

pub use algebra::{Family, LieModel, RootLabel};
pub use error::{Error, Result};
