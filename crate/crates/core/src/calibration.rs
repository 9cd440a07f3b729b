//! Calibration of an unknown measurement matrix.
//!
//! Basis images `x_i` are pre-measured with the known matrix (`y0_i = A x_i`)
//! and measured once each with the unknown one (`y_i`). With a weighting `S`
//! satisfying `Y S Y^T = I` (rows of `Y` are the `y0_i`), the sum of the
//! mismatch solutions `sum_i y_i (y0_i^T S A) / (y0_i^T S y0_i)` maps every
//! basis image to its unknown measurement, hence matches the unknown matrix
//! on the whole span of the basis.
//!
//! Two bases are supported: an orthonormal `Q` spanning the row space of `A`
//! (M measurements), and the pixel basis split into groups of at most M
//! columns (N measurements, exact recovery of the unknown matrix).

use std::ops::Range;

use crate::error::{Error, Result};
use crate::measurement::HiddenMatrix;
use crate::mismatch::MismatchKernel;
use crate::numeric::{matmul, norm2, pinv_wide, qr_thin, sub_vec, DenseMatrix, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisProvenance {
    QrOfKnownMatrix,
    QrWithEmbeddedImages,
}

/// Orthonormal columns spanning the calibrated subspace.
#[derive(Debug, Clone)]
pub struct CalibrationBasis<T> {
    pub q: DenseMatrix<T>,
    pub provenance: BasisProvenance,
}

impl<T: Scalar> CalibrationBasis<T> {
    /// `Q = qr_thin(a^T)`: the basis of the known matrix's row space.
    pub fn from_known(a: &DenseMatrix<T>, provenance: BasisProvenance) -> Result<Self> {
        Ok(Self {
            q: qr_thin(&a.transpose())?,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.q.cols()
    }
}

/// Column ranges `[kM, min((k+1)M, N))` of the grouped pixel-basis scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDescriptor {
    pub group_ranges: Vec<Range<usize>>,
}

impl GroupDescriptor {
    pub fn new(n: usize, group_size: usize) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::Precondition {
                op: "GroupDescriptor",
                detail: "group size must be positive".into(),
            });
        }
        let group_ranges = (0..n.div_ceil(group_size))
            .map(|k| k * group_size..((k + 1) * group_size).min(n))
            .collect();
        Ok(Self { group_ranges })
    }

    pub fn len(&self) -> usize {
        self.group_ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_ranges.is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum CalibrationLayout<T> {
    Subspace(CalibrationBasis<T>),
    Grouped(GroupDescriptor),
}

#[derive(Debug, Clone)]
pub struct CalibrationResult<T> {
    pub a_recv: DenseMatrix<T>,
    /// One weighting per basis group (a single entry for the subspace scheme).
    pub sigmas: Vec<DenseMatrix<T>>,
    pub layout: CalibrationLayout<T>,
    pub unknown_measure_count: usize,
}

/// `S = Y^T (Y Y^T)^{-1} (Y Y^T)^{-1} Y` for pre-measurements stored as the rows of `y`.
///
/// Satisfies `Y S Y^T = I` when the rows are independent.
pub fn sigma_from_premeasure<T: Scalar>(y: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let right = pinv_wide(y)?;
    matmul(&right, &right.transpose())
}

/// Cross multipliers `k(i, j) = y0_j^T S y0_i / y0_j^T S y0_j` (row `j`, column `i`).
///
/// A valid weighting makes this the identity.
pub fn cross_multipliers<T: Scalar>(
    premeasure_rows: &DenseMatrix<T>,
    sigma: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let ys = matmul(
        &matmul(premeasure_rows, sigma)?,
        &premeasure_rows.transpose(),
    )?;
    let n = ys.rows();
    Ok(DenseMatrix::from_fn(n, n, |j, i| ys[(j, i)] / ys[(j, j)]))
}

/// Calibrates against the orthonormal basis of `a`'s row space: M unknown measurements.
pub fn calibrate_mspace<T: Scalar>(
    a: &DenseMatrix<T>,
    oracle: &mut impl HiddenMatrix<T>,
) -> Result<CalibrationResult<T>> {
    let basis = CalibrationBasis::from_known(a, BasisProvenance::QrOfKnownMatrix)?;
    calibrate_with_basis(a, basis, oracle)
}

/// Subspace calibration with a caller-provided orthonormal basis of `a`'s row space.
pub fn calibrate_with_basis<T: Scalar>(
    a: &DenseMatrix<T>,
    basis: CalibrationBasis<T>,
    oracle: &mut impl HiddenMatrix<T>,
) -> Result<CalibrationResult<T>> {
    let q = &basis.q;
    if q.rows() != a.cols() {
        return Err(Error::dim(
            "calibrate_mspace",
            format!("basis has {} rows, a has {} columns", q.rows(), a.cols()),
        ));
    }
    let m = q.cols();
    // column i of a*Q is the pre-measure of basis image i
    let premeasure_rows = matmul(a, q)?.transpose();
    let sigma = sigma_from_premeasure(&premeasure_rows)?;

    let mut a_recv = DenseMatrix::zeros(a.rows(), a.cols());
    for i in 0..m {
        let y = oracle.measure(&q.column(i))?;
        let kernel = MismatchKernel::new(premeasure_rows.row(i), &sigma, a)?;
        kernel.accumulate(&mut a_recv, &y)?;
    }
    Ok(CalibrationResult {
        a_recv,
        sigmas: vec![sigma],
        layout: CalibrationLayout::Subspace(basis),
        unknown_measure_count: m,
    })
}

/// Least-squares coordinates of an image in a calibration basis.
#[derive(Debug, Clone)]
pub struct Coordinates<T> {
    pub b: Vec<T>,
    /// `|x - Q b| / |x|`.
    pub relative_residual: f64,
    pub in_span: bool,
}

/// Relative residual below which an image counts as inside the basis span (64-bit).
pub const IN_SPAN_TOLERANCE_F64: f64 = 1e-8;

fn in_span_tolerance<T: Scalar>() -> f64 {
    match T::PRECISION {
        crate::numeric::Precision::Bits64 => IN_SPAN_TOLERANCE_F64,
        crate::numeric::Precision::Bits32 => 1e-4,
    }
}

pub fn coordinates<T: Scalar>(basis: &CalibrationBasis<T>, x: &[T]) -> Result<Coordinates<T>> {
    let b = basis.q.matvec_t(x)?;
    let residual = norm2(&sub_vec(x, &basis.q.matvec(&b)?)).as_f64();
    let norm_x = norm2(x).as_f64();
    let relative_residual = if norm_x == 0.0 {
        0.0
    } else {
        residual / norm_x
    };
    Ok(Coordinates {
        b,
        relative_residual,
        in_span: relative_residual <= in_span_tolerance::<T>(),
    })
}

/// Replaces the last `images.len()` rows of `a` with the images, so they lie in
/// the span of `qr_thin(result^T)`.
pub fn embed_images_in_space<T: Scalar>(
    a: &DenseMatrix<T>,
    images: &[Vec<T>],
) -> Result<DenseMatrix<T>> {
    let (m, n) = a.shape();
    if images.len() > m {
        return Err(Error::Precondition {
            op: "embed_images_in_space",
            detail: format!("{} images exceed the {m} available rows", images.len()),
        });
    }
    if images.is_empty() {
        return Ok(a.clone());
    }
    let mut out = a.clone();
    let first = m - images.len();
    for (k, img) in images.iter().enumerate() {
        if img.len() != n {
            return Err(Error::dim(
                "embed_images_in_space",
                format!("image {k} has {} pixels, expected {n}", img.len()),
            ));
        }
        out.row_mut(first + k).copy_from_slice(img);
    }
    qr_thin(&out.transpose())?;
    Ok(out)
}

/// Exact calibration over the whole pixel space: N unknown measurements of the
/// canonical basis, in groups of at most M pixels.
pub fn calibrate_ndim_grouped<T: Scalar>(
    a: &DenseMatrix<T>,
    oracle: &mut impl HiddenMatrix<T>,
) -> Result<CalibrationResult<T>> {
    let (m, n) = a.shape();
    let groups = GroupDescriptor::new(n, m)?;
    let mut a_recv = DenseMatrix::zeros(m, n);
    let mut sigmas = Vec::with_capacity(groups.len());
    let mut calls = 0;

    for (g, range) in groups.group_ranges.iter().enumerate() {
        // pre-measure of e_i is column i of a
        let premeasure_rows = a.columns(range.start, range.end).transpose();
        let sigma = sigma_from_premeasure(&premeasure_rows).map_err(|e| Error::GroupSingular {
            group: g,
            source: Box::new(e),
        })?;
        let mut group_recv = DenseMatrix::zeros(m, n);
        for (k, i) in range.clone().enumerate() {
            let mut basis = vec![T::zero(); n];
            basis[i] = T::one();
            let y = oracle.measure(&basis)?;
            calls += 1;
            let kernel = MismatchKernel::new(premeasure_rows.row(k), &sigma, a).map_err(|e| {
                Error::GroupSingular {
                    group: g,
                    source: Box::new(e),
                }
            })?;
            kernel.accumulate(&mut group_recv, &y)?;
        }
        for i in range.clone() {
            a_recv.set_column(i, &group_recv.column(i));
        }
        sigmas.push(sigma);
    }
    Ok(CalibrationResult {
        a_recv,
        sigmas,
        layout: CalibrationLayout::Grouped(groups),
        unknown_measure_count: calls,
    })
}
