//! Per-image matched solutions.
//!
//! Both constructors accumulate rank-one mismatch solutions driven by the
//! current measurement error `e_y`, using the pre-measure `y0 = A pm` of a
//! known image `pm` and the weighting `(A A^T)^{-1}`.
//!
//! [`algorithm1`] re-measures the unknown image every epoch. [`algorithm2`]
//! measures it once, with the initial matrix from [`construct_initial`], and
//! afterwards predicts each measurement through the scale coefficient `k`.

use crate::error::{Error, Result};
use crate::measurement::{residual_error, HiddenImage};
use crate::mismatch::{sigma_special, MismatchKernel};
use crate::numeric::{dot, norm2, scale_vec, sub_vec, DenseMatrix, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    pub epochs: usize,
    /// Consecutive strictly increasing epochs before the run is flagged as non-converging.
    pub patience: usize,
    /// Stop early once the epoch error is at or below this value.
    pub stop_tolerance: f64,
    /// Epochs spent in [`construct_initial`] by [`algorithm2`].
    pub initial_epochs: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            patience: 10,
            stop_tolerance: 0.0,
            initial_epochs: 5,
        }
    }
}

/// Residual error recorded once per epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub errors: Vec<f64>,
    /// 1-based epoch with the smallest error (0 when empty).
    pub epoch_of_best: usize,
}

impl IterationTrace {
    fn push(&mut self, err: f64) {
        self.errors.push(err);
        let best = self.errors[self.epoch_of_best.saturating_sub(1)];
        if self.epoch_of_best == 0 || err < best {
            self.epoch_of_best = self.errors.len();
        }
    }

    pub fn last(&self) -> Option<f64> {
        self.errors.last().copied()
    }

    /// True if the trace ends with `patience` strictly increasing steps.
    fn rising_for(&self, patience: usize) -> bool {
        if patience == 0 || self.errors.len() <= patience {
            return false;
        }
        self.errors[self.errors.len() - patience - 1..]
            .windows(2)
            .all(|w| w[1] > w[0])
    }
}

#[derive(Debug, Clone)]
pub struct MatchedSolutionResult<T> {
    pub a_recv: DenseMatrix<T>,
    pub trace: IterationTrace,
    /// Estimated convergence coefficient (error ratio of the first epoch for
    /// algorithm 1, `1 - k` for algorithm 2).
    pub k_eps_estimate: f64,
    pub epochs_run: usize,
    /// Set when the error rose for `patience` consecutive epochs. The run is not aborted.
    pub non_convergence: bool,
}

fn check_epochs(op: &'static str, epochs: usize) -> Result<()> {
    if epochs == 0 {
        return Err(Error::Precondition {
            op,
            detail: "epochs must be at least 1".into(),
        });
    }
    Ok(())
}

/// Matched solution that re-measures the unknown image through `oracle` after every update.
pub fn algorithm1<T: Scalar>(
    y_prime: &[T],
    oracle: &mut impl HiddenImage<T>,
    a: &DenseMatrix<T>,
    pm: &[T],
    cfg: &MatchConfig,
) -> Result<MatchedSolutionResult<T>> {
    check_epochs("algorithm1", cfg.epochs)?;
    if y_prime.len() != a.rows() {
        return Err(Error::dim("algorithm1", "y' length differs from a.rows()"));
    }
    let y0 = a.matvec(pm)?;
    let sigma = sigma_special(a)?;
    let kernel = MismatchKernel::new(&y0, &sigma, a)?;

    let mut a_recv = DenseMatrix::zeros(a.rows(), a.cols());
    let mut e_y = y_prime.to_vec();
    let mut trace = IterationTrace::default();
    let mut k_eps_estimate = f64::NAN;
    let mut non_convergence = false;

    for epoch in 1..=cfg.epochs {
        kernel.accumulate(&mut a_recv, &e_y)?;
        let measured = oracle.measure_with(&a_recv)?;
        if measured.len() != y_prime.len() {
            return Err(Error::dim(
                "algorithm1",
                "oracle returned a measurement of the wrong length",
            ));
        }
        e_y = sub_vec(y_prime, &measured);
        let err = mean_abs(&e_y);
        if epoch == 1 {
            k_eps_estimate = (dot(y_prime, &e_y) / dot(y_prime, y_prime)).as_f64();
        }
        trace.push(err);
        non_convergence |= trace.rising_for(cfg.patience);
        if !err.is_finite() {
            return Err(Error::NonFinite("algorithm1"));
        }
        if err <= cfg.stop_tolerance {
            break;
        }
    }
    Ok(MatchedSolutionResult {
        epochs_run: trace.errors.len(),
        a_recv,
        trace,
        k_eps_estimate,
        non_convergence,
    })
}

/// Initial matrix whose action on `pm` reproduces `y0 = A pm`, computed entirely offline.
#[derive(Debug, Clone)]
pub struct InitialSolution<T> {
    pub y0: Vec<T>,
    pub a_recv: DenseMatrix<T>,
    /// `residual_error(y0, a_recv * pm)` after each epoch.
    pub trace: IterationTrace,
}

pub fn construct_initial<T: Scalar>(
    a: &DenseMatrix<T>,
    pm: &[T],
    epochs: usize,
) -> Result<InitialSolution<T>> {
    check_epochs("construct_initial", epochs)?;
    let y0 = a.matvec(pm)?;
    let kernel = MismatchKernel::new(&y0, &sigma_special(a)?, a)?;
    construct_initial_with(&kernel, y0, pm, epochs)
}

fn construct_initial_with<T: Scalar>(
    kernel: &MismatchKernel<T>,
    y0: Vec<T>,
    pm: &[T],
    epochs: usize,
) -> Result<InitialSolution<T>> {
    let mut a_recv = DenseMatrix::zeros(y0.len(), pm.len());
    let mut e_y = y0.clone();
    let mut trace = IterationTrace::default();
    for _ in 0..epochs {
        kernel.accumulate(&mut a_recv, &e_y)?;
        e_y = sub_vec(&y0, &a_recv.matvec(pm)?);
        trace.push(mean_abs(&e_y));
    }
    Ok(InitialSolution { y0, a_recv, trace })
}

/// Least-squares scalar `k` minimising `|y - k y_pm|`.
pub fn scale_coefficient<T: Scalar>(y: &[T], y_pm: &[T]) -> Result<T> {
    if y.len() != y_pm.len() {
        return Err(Error::dim(
            "scale_coefficient",
            format!("lengths {} and {}", y.len(), y_pm.len()),
        ));
    }
    let norm_pm = norm2(y_pm);
    let floor = T::DENOMINATOR_FLOOR * norm2(y).as_f64();
    if norm_pm == T::zero() || norm_pm.as_f64() < floor {
        return Err(Error::DegenerateDenominator {
            op: "scale_coefficient",
            value: norm_pm.as_f64(),
            floor,
        });
    }
    Ok(dot(y_pm, y) / dot(y_pm, y_pm))
}

/// Matched solution using exactly one measurement of the unknown image.
///
/// The scale coefficient `k` is estimated once from that measurement and held
/// fixed: re-estimating it would need another physical measurement.
pub fn algorithm2<T: Scalar>(
    y_prime: &[T],
    one_shot: &mut impl HiddenImage<T>,
    a: &DenseMatrix<T>,
    pm: &[T],
    cfg: &MatchConfig,
) -> Result<MatchedSolutionResult<T>> {
    check_epochs("algorithm2", cfg.epochs)?;
    check_epochs("algorithm2 (initial)", cfg.initial_epochs)?;
    if y_prime.len() != a.rows() {
        return Err(Error::dim("algorithm2", "y' length differs from a.rows()"));
    }
    let y0 = a.matvec(pm)?;
    let kernel = MismatchKernel::new(&y0, &sigma_special(a)?, a)?;
    let initial = construct_initial_with(&kernel, y0, pm, cfg.initial_epochs)?;
    let mut a_recv = initial.a_recv;

    let y = one_shot.measure_with(&a_recv)?;
    let y_pm = a_recv.matvec(pm)?;
    let k = scale_coefficient(&y, &y_pm)?;
    let mut e_y = sub_vec(y_prime, &scale_vec(&y_pm, k));

    let mut trace = IterationTrace::default();
    let mut non_convergence = false;
    for _ in 0..cfg.epochs {
        kernel.accumulate(&mut a_recv, &e_y)?;
        let predicted = scale_vec(&a_recv.matvec(pm)?, k);
        e_y = sub_vec(y_prime, &predicted);
        let err = mean_abs(&e_y);
        trace.push(err);
        non_convergence |= trace.rising_for(cfg.patience);
        if !err.is_finite() {
            return Err(Error::NonFinite("algorithm2"));
        }
        if err <= cfg.stop_tolerance {
            break;
        }
    }
    Ok(MatchedSolutionResult {
        epochs_run: trace.errors.len(),
        a_recv,
        trace,
        k_eps_estimate: 1.0 - k.as_f64(),
        non_convergence,
    })
}

fn mean_abs<T: Scalar>(v: &[T]) -> f64 {
    let zeros = vec![T::zero(); v.len()];
    residual_error(v, &zeros)
        .map(|e| e.as_f64())
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{NoiseSource, SimulatedImage};
    use crate::mismatch::k_epsilon;
    use crate::rng::NormalStream;
    use crate::synth::gaussian_matrix;

    struct Setup {
        a: DenseMatrix<f64>,
        a_u: DenseMatrix<f64>,
        x: Vec<f64>,
        pm: Vec<f64>,
    }

    fn setup(seed: u64, m: usize, n: usize) -> Setup {
        let mut rng = NormalStream::new(seed, 0);
        let a = gaussian_matrix(&mut rng, m, n);
        let a_u = gaussian_matrix(&mut rng, m, n);
        let x = (0..n).map(|_| 0.2 + 0.6 * rng.next_uniform()).collect();
        Setup {
            a,
            a_u,
            x,
            pm: vec![0.5; n],
        }
    }

    fn noiseless(x: &[f64]) -> SimulatedImage<f64> {
        SimulatedImage::new(x.to_vec(), NoiseSource::noiseless())
    }

    #[test]
    fn matched_pm_converges_in_one_epoch() {
        let s = setup(1, 12, 40);
        let y = s.a_u.matvec(&s.x).unwrap();
        let cfg = MatchConfig {
            epochs: 5,
            ..Default::default()
        };
        let r = algorithm1(&y, &mut noiseless(&s.x), &s.a, &s.x, &cfg).unwrap();
        assert!(r.trace.errors[0] <= 1e-10);
        let r2 = algorithm2(&y, &mut noiseless(&s.x), &s.a, &s.x, &cfg).unwrap();
        assert!(r2.trace.errors[0] <= 1e-10);
        let res = residual_error(&y, &r2.a_recv.matvec(&s.x).unwrap()).unwrap();
        assert!(res <= 1e-10);
    }

    #[test]
    fn noiseless_error_follows_geometric_law() {
        let s = setup(2, 12, 40);
        let y = s.a_u.matvec(&s.x).unwrap();
        let y0 = s.a.matvec(&s.pm).unwrap();
        let sigma = sigma_special(&s.a).unwrap();
        let k_eps = k_epsilon(&y0, &sigma, &s.a, &s.pm, &s.x).unwrap().value();
        let cfg = MatchConfig {
            epochs: 40,
            ..Default::default()
        };
        let r = algorithm1(&y, &mut noiseless(&s.x), &s.a, &s.pm, &cfg).unwrap();
        let e0 = mean_abs(&y);
        for (i, &err) in r.trace.errors.iter().enumerate() {
            let predicted = k_eps.abs().powi(i as i32 + 1) * e0;
            assert!(
                (err - predicted).abs() <= 1e-6 * predicted + 1e-12,
                "epoch {}",
                i + 1
            );
        }
        assert!((r.k_eps_estimate - k_eps).abs() < 1e-10);
    }

    #[test]
    fn diverges_when_coefficient_exceeds_one() {
        let s = setup(3, 12, 40);
        // x = -pm gives k(x) = -1, so k_eps = 2
        let x: Vec<f64> = s.pm.iter().map(|v| -v).collect();
        let y = s.a_u.matvec(&x).unwrap();
        let cfg = MatchConfig {
            epochs: 15,
            ..Default::default()
        };
        let r = algorithm1(&y, &mut noiseless(&x), &s.a, &s.pm, &cfg).unwrap();
        assert!(r.trace.errors.windows(2).all(|w| w[1] > w[0]));
        assert!(r.non_convergence);
        assert!((r.k_eps_estimate - 2.0).abs() < 1e-9);
    }

    #[test]
    fn construct_initial_reproduces_premeasure() {
        let s = setup(4, 12, 40);
        let init = construct_initial(&s.a, &s.pm, 5).unwrap();
        let r = residual_error(&init.y0, &init.a_recv.matvec(&s.pm).unwrap()).unwrap();
        assert!(r <= 1e-8);
        assert!(construct_initial(&s.a, &s.pm, 0).is_err());
    }

    #[test]
    fn construct_initial_single_precision_improves() {
        let s = setup(5, 12, 40);
        let a32 = s.a.cast::<f32>();
        let pm32: Vec<f32> = s.pm.iter().map(|&v| v as f32).collect();
        let init = construct_initial(&a32, &pm32, 6).unwrap();
        let first = init.trace.errors[0];
        let best = init
            .trace
            .errors
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(best <= first);
        assert!(best < 1e-4);
    }

    #[test]
    fn scale_coefficient_cases() {
        let y_pm = [1.0, -2.0, 0.5];
        assert_eq!(scale_coefficient(&[3.0, -6.0, 1.5], &y_pm).unwrap(), 3.0);
        assert_eq!(scale_coefficient(&y_pm, &y_pm).unwrap(), 1.0);
        // eta orthogonal to y_pm
        let eta = [2.0, 1.0, 0.0];
        let y: Vec<f64> = y_pm.iter().zip(&eta).map(|(p, e)| 2.0 * p + e).collect();
        assert_eq!(scale_coefficient(&y, &y_pm).unwrap(), 2.0);
        assert!(matches!(
            scale_coefficient(&[1.0, 1.0, 1.0], &[0.0; 3]),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn algorithm2_measures_once() {
        let s = setup(6, 12, 40);
        let y = s.a_u.matvec(&s.x).unwrap();
        let mut oracle = noiseless(&s.x);
        let cfg = MatchConfig {
            epochs: 60,
            ..Default::default()
        };
        let r = algorithm2(&y, &mut oracle, &s.a, &s.pm, &cfg).unwrap();
        assert_eq!(oracle.calls(), 1);
        assert_eq!(r.epochs_run, 60);

        let mut oracle1 = noiseless(&s.x);
        let r1 = algorithm1(&y, &mut oracle1, &s.a, &s.pm, &cfg).unwrap();
        assert_eq!(oracle1.calls(), 60);
        let y1 = r1.a_recv.matvec(&s.x).unwrap();
        let y2 = r.a_recv.matvec(&s.x).unwrap();
        assert!(crate::numeric::norm_inf(&sub_vec(&y1, &y2)) <= 1e-6);
    }

    #[test]
    fn trace_bookkeeping() {
        let mut t = IterationTrace::default();
        for e in [3.0, 1.0, 2.0, 0.5, 0.7] {
            t.push(e);
        }
        assert_eq!(t.epoch_of_best, 4);
        assert!(!t.rising_for(2));
        t.push(0.9);
        assert!(t.rising_for(2));
    }
}
