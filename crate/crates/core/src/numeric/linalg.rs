//! Dense kernels: product, Gauss-Jordan inverse, wide pseudo-inverse, thin Householder QR.

use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, Scalar};

/// Standard matrix product `a * b`.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols() != b.rows() {
        return Err(Error::dim(
            "matmul",
            format!("{}x{} times {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let arow = a.row(i);
        let orow = out.row_mut(i);
        for (k, &aik) in arow.iter().enumerate() {
            if aik == T::zero() {
                continue;
            }
            for (o, &bkj) in orow.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `a * a^T`, exploiting symmetry.
pub fn gram_rows<T: Scalar>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    let m = a.rows();
    let mut g = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = crate::numeric::dot(a.row(i), a.row(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
///
/// A pivot smaller than `n * eps * max|a|` is treated as singular.
pub fn inverse<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::dim(
            "inverse",
            format!("matrix is {}x{}, not square", a.rows(), a.cols()),
        ));
    }
    let threshold = T::from_f64(n as f64) * T::epsilon() * a.max_abs();
    let mut work = a.clone();
    let mut inv = DenseMatrix::identity(n);

    for col in 0..n {
        let (pivot_row, pivot_abs) =
            (col..n)
                .map(|r| (r, work[(r, col)].abs()))
                .fold(
                    (col, -T::one()),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pivot_abs.is_nan() || pivot_abs <= threshold {
            return Err(Error::Singular {
                pivot: pivot_abs.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        if pivot_row != col {
            swap_rows(&mut work, pivot_row, col);
            swap_rows(&mut inv, pivot_row, col);
        }
        let p = work[(col, col)];
        for v in work.row_mut(col) {
            *v /= p;
        }
        for v in inv.row_mut(col) {
            *v /= p;
        }
        let pivot_work = work.row(col).to_vec();
        let pivot_inv = inv.row(col).to_vec();
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = work[(r, col)];
            if f == T::zero() {
                continue;
            }
            for (dst, &src) in work.row_mut(r).iter_mut().zip(&pivot_work) {
                *dst -= f * src;
            }
            for (dst, &src) in inv.row_mut(r).iter_mut().zip(&pivot_inv) {
                *dst -= f * src;
            }
        }
    }
    if !inv.is_finite() {
        return Err(Error::NonFinite("inverse"));
    }
    Ok(inv)
}

fn swap_rows<T: Scalar>(m: &mut DenseMatrix<T>, a: usize, b: usize) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    for j in 0..cols {
        data.swap(a * cols + j, b * cols + j);
    }
}

/// Right pseudo-inverse `y^T (y y^T)^{-1}` of a wide matrix with independent rows.
pub fn pinv_wide<T: Scalar>(y: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if y.rows() > y.cols() {
        return Err(Error::dim(
            "pinv_wide",
            format!("expected rows <= cols, got {}x{}", y.rows(), y.cols()),
        ));
    }
    let gram_inv = inverse(&gram_rows(y))?;
    matmul(&y.transpose(), &gram_inv)
}

/// Orthonormal basis `Q` (n x m) of the column space of `a` (n x m, n >= m).
///
/// Householder reflections; the implicit `R` has a nonnegative diagonal so the
/// output is deterministic.
pub fn qr_thin<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (n, m) = a.shape();
    if n < m {
        return Err(Error::dim(
            "qr_thin",
            format!("expected rows >= cols, got {n}x{m}"),
        ));
    }
    let max_col_norm = (0..m)
        .map(|j| crate::numeric::norm2(&a.column(j)))
        .fold(T::zero(), T::max);
    let tol = T::from_f64(n.max(1) as f64) * T::epsilon() * max_col_norm;

    let mut r = a.clone();
    let mut reflectors: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut diag_sign = vec![T::one(); m];

    for j in 0..m {
        let x: Vec<T> = (j..n).map(|i| r[(i, j)]).collect();
        let norm_x = crate::numeric::norm2(&x);
        if norm_x.is_nan() || norm_x <= tol {
            return Err(Error::RankDeficient { column: j });
        }
        let alpha = if x[0] >= T::zero() { -norm_x } else { norm_x };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = crate::numeric::norm2(&v);
        if vnorm > T::zero() {
            for vi in v.iter_mut() {
                *vi /= vnorm;
            }
            apply_reflector(&mut r, &v, j, j);
        } else {
            v.iter_mut().for_each(|vi| *vi = T::zero());
        }
        // R[j][j] == alpha after reflection; flip Q's column where it is negative.
        if alpha < T::zero() {
            diag_sign[j] = -T::one();
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{m-1} applied to the first m columns of the identity.
    let mut q = DenseMatrix::from_fn(n, m, |i, j| if i == j { T::one() } else { T::zero() });
    for j in (0..m).rev() {
        apply_reflector(&mut q, &reflectors[j], j, 0);
    }
    for j in 0..m {
        if diag_sign[j] < T::zero() {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// Applies `I - 2 v v^T` (v acting on rows `row0..`) to columns `col0..` of `m`.
fn apply_reflector<T: Scalar>(m: &mut DenseMatrix<T>, v: &[T], row0: usize, col0: usize) {
    let two = T::from_f64(2.0);
    for c in col0..m.cols() {
        let mut s = T::zero();
        for (k, &vk) in v.iter().enumerate() {
            s += vk * m[(row0 + k, c)];
        }
        if s == T::zero() {
            continue;
        }
        s *= two;
        for (k, &vk) in v.iter().enumerate() {
            m[(row0 + k, c)] -= s * vk;
        }
    }
}
