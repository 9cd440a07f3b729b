//! The mismatch equation
//!
//! ```text
//! A_recv = y (y0^T S A) / (y0^T S y0)
//! ```
//!
//! For any image `x` with `y0 = A x`, `A_recv x = y`, whatever the nonsingular
//! weighting `S`. Because `A_recv` is an outer product, it measures every image
//! as a multiple of `y`: `A_recv x = k(x) y` with `k(x) = y0^T S A x / y0^T S y0`.

use crate::error::{Error, Result};
use crate::numeric::{dot, gram_rows, inverse, norm2, norm_inf, sub_vec, DenseMatrix, Scalar};

/// `(A A^T)^{-1}`, the special weighting used by the matched-solution algorithms.
pub fn sigma_special<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.rows() > a.cols() {
        return Err(Error::dim(
            "sigma_special",
            format!("expected a wide matrix, got {}x{}", a.rows(), a.cols()),
        ));
    }
    inverse(&gram_rows(a))
}

/// Precomputed row vector `w = A^T S^T y0 / (y0^T S y0)`, so that the mismatch
/// solution for a target `y` is the outer product `y w^T` and `k(x) = w . x`.
#[derive(Debug, Clone)]
pub struct MismatchKernel<T> {
    weights: Vec<T>,
    denominator: T,
}

impl<T: Scalar> MismatchKernel<T> {
    pub fn new(y0: &[T], sigma: &DenseMatrix<T>, a: &DenseMatrix<T>) -> Result<Self> {
        let m = a.rows();
        if y0.len() != m || sigma.shape() != (m, m) {
            return Err(Error::dim(
                "mismatch kernel",
                format!(
                    "y0 has {}, sigma is {:?}, a is {}x{}",
                    y0.len(),
                    sigma.shape(),
                    a.rows(),
                    a.cols()
                ),
            ));
        }
        let sigma_y0 = sigma.matvec(y0)?;
        let sigma_t_y0 = sigma.matvec_t(y0)?;
        let denominator = dot(y0, &sigma_y0);
        check_denominator(
            "mismatch_solution",
            denominator,
            norm2(y0) * norm2(&sigma_y0),
        )?;
        let mut weights = a.matvec_t(&sigma_t_y0)?;
        for w in weights.iter_mut() {
            *w /= denominator;
        }
        Ok(Self {
            weights,
            denominator,
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn denominator(&self) -> T {
        self.denominator
    }

    /// `k(x)`: the factor by which any solution of this kernel scales its target when measuring `x`.
    pub fn multiplier(&self, x: &[T]) -> Result<T> {
        if x.len() != self.weights.len() {
            return Err(Error::dim(
                "multiplier_k",
                format!("image length {} vs {}", x.len(), self.weights.len()),
            ));
        }
        Ok(dot(&self.weights, x))
    }

    /// Rank-one solution `y w^T`.
    pub fn solution(&self, y: &[T]) -> Result<DenseMatrix<T>> {
        let mut out = DenseMatrix::zeros(y.len(), self.weights.len());
        out.add_outer(y, &self.weights)?;
        Ok(out)
    }

    /// Adds `y w^T` into an accumulator.
    pub fn accumulate(&self, target: &mut DenseMatrix<T>, y: &[T]) -> Result<()> {
        target.add_outer(y, &self.weights)
    }
}

fn check_denominator<T: Scalar>(op: &'static str, value: T, scale: T) -> Result<()> {
    let floor = T::DENOMINATOR_FLOOR * scale.as_f64();
    let v = value.as_f64();
    if !v.is_finite() || v.abs() < floor || v == 0.0 {
        return Err(Error::DegenerateDenominator {
            op,
            value: v,
            floor,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MismatchSolution<T> {
    pub a_recv: DenseMatrix<T>,
    pub y0: Vec<T>,
    pub y: Vec<T>,
    pub sigma_used: DenseMatrix<T>,
}

pub fn mismatch_solution<T: Scalar>(
    y0: &[T],
    y: &[T],
    sigma: &DenseMatrix<T>,
    a: &DenseMatrix<T>,
) -> Result<MismatchSolution<T>> {
    if y.len() != y0.len() {
        return Err(Error::dim(
            "mismatch_solution",
            format!("y0 has {}, y has {}", y0.len(), y.len()),
        ));
    }
    let kernel = MismatchKernel::new(y0, sigma, a)?;
    Ok(MismatchSolution {
        a_recv: kernel.solution(y)?,
        y0: y0.to_vec(),
        y: y.to_vec(),
        sigma_used: sigma.clone(),
    })
}

/// `k(x) = y0^T S A x / y0^T S y0`.
pub fn multiplier_k<T: Scalar>(
    y0: &[T],
    sigma: &DenseMatrix<T>,
    a: &DenseMatrix<T>,
    x: &[T],
) -> Result<T> {
    MismatchKernel::new(y0, sigma, a)?.multiplier(x)
}

/// Geometric ratio of the iterative error recurrence; the iteration converges iff `|k_eps| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCoefficient<T>(pub T);

impl<T: Scalar> ConvergenceCoefficient<T> {
    pub fn value(self) -> T {
        self.0
    }

    pub fn converges(self) -> bool {
        self.0.abs() < T::one()
    }
}

/// `k_eps = y0^T S A (pm - x) / y0^T S y0`, checking that `y0 = A pm`.
pub fn k_epsilon<T: Scalar>(
    y0: &[T],
    sigma: &DenseMatrix<T>,
    a: &DenseMatrix<T>,
    pm: &[T],
    x: &[T],
) -> Result<ConvergenceCoefficient<T>> {
    let expected = a.matvec(pm)?;
    if expected.len() != y0.len() {
        return Err(Error::dim("k_epsilon", "y0 length differs from a.rows()"));
    }
    let gap = norm_inf(&sub_vec(y0, &expected)).as_f64();
    let scale = norm_inf(y0).as_f64().max(1.0);
    if gap > T::CONSISTENCY_TOL * scale {
        return Err(Error::Precondition {
            op: "k_epsilon",
            detail: format!("y0 differs from A*pm by {gap:e}"),
        });
    }
    let kernel = MismatchKernel::new(y0, sigma, a)?;
    if x.len() != pm.len() {
        return Err(Error::dim("k_epsilon", "pm and x lengths differ"));
    }
    Ok(ConvergenceCoefficient(kernel.multiplier(&sub_vec(pm, x))?))
}

/// Summary statistics of a lambda vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaStats {
    pub mean: f64,
    pub range: f64,
    pub std: f64,
    /// Components used.
    pub count: usize,
    /// Components dropped because their denominator fell below the floor.
    pub excluded: usize,
}

impl LambdaStats {
    fn from_components(values: &[f64], excluded: usize) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                range: f64::NAN,
                std: f64::NAN,
                count: 0,
                excluded,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Self {
            mean,
            range: hi - lo,
            std: var.sqrt(),
            count: n,
            excluded,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LambdaVector<T> {
    pub components: Vec<T>,
    pub stats: LambdaStats,
}

/// Component-wise ratio `(A_recv x_other)_i / (A_recv x')_i`. Fails if any denominator is below the floor.
pub fn lambda_vector<T: Scalar>(
    a_recv: &DenseMatrix<T>,
    x_prime: &[T],
    x_other: &[T],
) -> Result<LambdaVector<T>> {
    let (num, den, floor) = lambda_parts(a_recv, x_prime, x_other)?;
    if let Some(bad) = den.iter().find(|d| d.abs().as_f64() < floor) {
        return Err(Error::DegenerateDenominator {
            op: "lambda_vector",
            value: bad.as_f64(),
            floor,
        });
    }
    let components: Vec<T> = num.iter().zip(&den).map(|(&n, &d)| n / d).collect();
    let as_f64: Vec<f64> = components.iter().map(|c| c.as_f64()).collect();
    Ok(LambdaVector {
        stats: LambdaStats::from_components(&as_f64, 0),
        components,
    })
}

/// Like [`lambda_vector`], but drops degenerate components and counts them instead of failing.
pub fn lambda_stats_lenient<T: Scalar>(
    a_recv: &DenseMatrix<T>,
    x_prime: &[T],
    x_other: &[T],
) -> Result<LambdaStats> {
    let (num, den, floor) = lambda_parts(a_recv, x_prime, x_other)?;
    let mut kept = Vec::with_capacity(den.len());
    let mut excluded = 0;
    for (&n, &d) in num.iter().zip(&den) {
        if d.abs().as_f64() < floor {
            excluded += 1;
        } else {
            kept.push((n / d).as_f64());
        }
    }
    Ok(LambdaStats::from_components(&kept, excluded))
}

fn lambda_parts<T: Scalar>(
    a_recv: &DenseMatrix<T>,
    x_prime: &[T],
    x_other: &[T],
) -> Result<(Vec<T>, Vec<T>, f64)> {
    let den = a_recv.matvec(x_prime)?;
    let num = a_recv.matvec(x_other)?;
    let floor = T::DENOMINATOR_FLOOR * norm_inf(&den).as_f64();
    Ok((num, den, floor))
}
