//! Precision-generic dense linear algebra.

mod linalg;
mod matrix;
mod scalar;

pub use linalg::{gram_rows, inverse, matmul, pinv_wide, qr_thin};
pub use matrix::{cast_vec, dot, norm2, norm_inf, scale_vec, sub_vec, DenseMatrix};
pub use scalar::{Precision, Scalar};
