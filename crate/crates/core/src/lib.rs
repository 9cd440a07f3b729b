//! Replacement measurement matrices for mismatched compressed sensing.
//!
//! A measurement `y' = A_u x'` taken with an unknown matrix `A_u` cannot be
//! inverted with a different known matrix `A`. This crate constructs a
//! replacement `A_recv` such that `(y', A_recv)` is a matched pair:
//!
//! - [`matched`]: per-image matched solutions built iteratively from the
//!   rank-one mismatch equation ([`mismatch`]).
//! - [`calibration`]: a single `A_recv` valid for every image in a chosen
//!   subspace, or for the whole pixel space via grouped canonical bases.
//! - [`recovery`]: an l1 solver for end-to-end checks.
//! - [`precision_lab`]: 32- vs 64-bit behaviour of the constructions.
//! - [`experiment`]: the desk-scale experiment harness behind the `mmcal` binary.
//!
//! All kernels are generic over [`numeric::Scalar`] (`f32` or `f64`).

pub mod calibration;
pub mod error;
pub mod experiment;
pub mod image;
pub mod io;
pub mod matched;
pub mod measurement;
pub mod mismatch;
pub mod numeric;
pub mod precision_lab;
pub mod recovery;
pub mod rng;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use numeric::{DenseMatrix, Precision, Scalar};
