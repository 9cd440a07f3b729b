//! ℓ1-regularized least squares by FISTA with monotone restart.
//!
//! Minimizes `0.5 |y - A x|^2 + tau |x|_1`.

use crate::error::{Error, Result};
use crate::numeric::{dot, norm2, norm_inf, sub_vec, DenseMatrix, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryConfig {
    /// ℓ1 weight; `None` uses `1e-3 * |A^T y|_inf`.
    pub tau: Option<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Gradient step; `None` uses `1 / L` with `L` the top eigenvalue of `A^T A`.
    pub step: Option<f64>,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            tau: None,
            max_iters: 2000,
            rel_tol: 1e-8,
            step: None,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tau must be positive, got {t}")));
            }
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("step must be positive, got {s}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol < 0.0 {
            return Err(Error::Config(format!(
                "rel_tol must be >= 0, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Recovery<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub objective: f64,
    pub tau: f64,
    pub step: f64,
    pub converged: bool,
}

/// Component-wise `sign(v) * max(|v| - t, 0)`.
pub fn soft_threshold<T: Scalar>(v: &[T], t: T) -> Vec<T> {
    v.iter()
        .map(|&x| {
            let m = x.abs() - t;
            if m > T::zero() {
                x.signum() * m
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Largest eigenvalue of `A^T A` by power iteration, to `rel_tol` relative change.
pub fn power_iteration<T: Scalar>(
    a: &DenseMatrix<T>,
    rel_tol: f64,
    max_iters: usize,
) -> Result<f64> {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return Ok(0.0);
    }
    // deterministic start with no special alignment
    let mut v: Vec<T> = (0..n)
        .map(|i| T::from_f64(1.0 + 0.5 * ((i as f64 * 0.618_033_988_75).fract() - 0.5)))
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = a.matvec_t(&a.matvec(&v)?)?;
        let next = dot(&v, &w).as_f64();
        let nw = norm2(&w);
        if nw == T::zero() {
            return Ok(0.0);
        }
        v = w.iter().map(|&x| x / nw).collect();
        let done = (next - lambda).abs() <= rel_tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    Ok(lambda)
}

fn objective<T: Scalar>(a: &DenseMatrix<T>, y: &[T], x: &[T], tau: f64) -> Result<f64> {
    let r = sub_vec(&a.matvec(x)?, y);
    let fit = r.iter().map(|v| v.as_f64().powi(2)).sum::<f64>();
    let l1 = x.iter().map(|v| v.as_f64().abs()).sum::<f64>();
    Ok(0.5 * fit + tau * l1)
}

fn prox_grad_step<T: Scalar>(
    a: &DenseMatrix<T>,
    y: &[T],
    at: &[T],
    step: T,
    thresh: T,
) -> Result<Vec<T>> {
    let grad = a.matvec_t(&sub_vec(&a.matvec(at)?, y))?;
    let moved: Vec<T> = at.iter().zip(&grad).map(|(&p, &g)| p - step * g).collect();
    Ok(soft_threshold(&moved, thresh))
}

/// `|x - prox(x - step grad)|`, zero exactly at a minimizer.
pub fn fixed_point_residual<T: Scalar>(
    a: &DenseMatrix<T>,
    y: &[T],
    x: &[T],
    tau: f64,
    step: f64,
) -> Result<f64> {
    let next = prox_grad_step(a, y, x, T::from_f64(step), T::from_f64(step * tau))?;
    Ok(norm2(&sub_vec(x, &next)).as_f64())
}

/// FISTA from `x = 0`. Momentum restarts whenever a step would raise the
/// objective, so the objective never increases. Stops once the relative
/// objective change and the fixed-point residual are both below tolerance,
/// or after `max_iters`.
pub fn fista_l1<T: Scalar>(
    y: &[T],
    a: &DenseMatrix<T>,
    cfg: &RecoveryConfig,
) -> Result<Recovery<T>> {
    cfg.validate()?;
    if y.len() != a.rows() {
        return Err(Error::dim(
            "fista_l1",
            format!("y has {} entries, a has {} rows", y.len(), a.rows()),
        ));
    }
    let n = a.cols();
    let tau = match cfg.tau {
        Some(t) => t,
        None => 1e-3 * norm_inf(&a.matvec_t(y)?).as_f64(),
    };
    let step = match cfg.step {
        Some(s) => s,
        None => {
            let l = power_iteration(a, 1e-6, 10_000)?;
            if l > 0.0 {
                1.0 / l
            } else {
                1.0
            }
        }
    };
    let mut x = vec![T::zero(); n];
    let mut f = objective(a, y, &x, tau)?;
    // A^T y = 0 makes x = 0 a minimizer
    if n == 0 || tau == 0.0 {
        return Ok(Recovery {
            x,
            iterations: 0,
            objective: f,
            tau,
            step,
            converged: true,
        });
    }

    let (step_t, thresh) = (T::from_f64(step), T::from_f64(step * tau));
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let mut cand = prox_grad_step(a, y, &z, step_t, thresh)?;
        let mut f_cand = objective(a, y, &cand, tau)?;
        if f_cand > f {
            // restart: a plain proximal step from x cannot increase the objective
            t = 1.0;
            cand = prox_grad_step(a, y, &x, step_t, thresh)?;
            f_cand = objective(a, y, &cand, tau)?;
            if f_cand > f {
                cand = x.clone();
                f_cand = f;
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = T::from_f64((t - 1.0) / t_next);
        z = cand
            .iter()
            .zip(&x)
            .map(|(&c, &p)| c + beta * (c - p))
            .collect();
        let change = (f - f_cand).abs();
        x = cand;
        f = f_cand;
        t = t_next;

        if change <= cfg.rel_tol * f.abs().max(f64::MIN_POSITIVE) {
            let res = fixed_point_residual(a, y, &x, tau, step)?;
            let xn = norm2(&x).as_f64();
            if res <= 10.0 * cfg.rel_tol * xn || xn == 0.0 && res == 0.0 {
                converged = true;
                break;
            }
        }
    }
    Ok(Recovery {
        x,
        iterations,
        objective: f,
        tau,
        step,
        converged,
    })
}

/// `|x - x_ref| / |x_ref|`.
pub fn relative_error<T: Scalar>(x_ref: &[T], x: &[T]) -> f64 {
    let num = norm2(&sub_vec(x, x_ref)).as_f64();
    let den = norm2(x_ref).as_f64();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Indices whose magnitude exceeds `threshold`.
pub fn support<T: Scalar>(x: &[T], threshold: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.as_f64().abs() > threshold)
        .map(|(i, _)| i)
        .collect()
}
