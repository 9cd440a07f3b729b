//! Measurement model `y = A x + eps`, noise, and error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, Scalar};
use crate::rng::NormalStream;

/// Gaussian noise for a single measurement call: `eps = sigma * N(0, 1)` drawn
/// from child stream `stream` of the master `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
    pub stream: u64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma: 0.0,
            seed: 0,
            stream: 0,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma == 0.0
    }

    /// The noise vector this snapshot adds to a measurement of length `len`.
    pub fn sample(&self, len: usize) -> Vec<f64> {
        if self.is_noiseless() {
            return vec![0.0; len];
        }
        let mut s = NormalStream::new(self.seed, self.stream);
        (0..len).map(|_| self.sigma * s.next_normal()).collect()
    }
}

/// Issues one [`NoiseModel`] snapshot per measurement call, numbering streams 0, 1, 2, ...
#[derive(Debug, Clone)]
pub struct NoiseSource {
    sigma: f64,
    seed: u64,
    calls: u64,
}

impl NoiseSource {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::Config(format!(
                "noise sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(Self {
            sigma,
            seed,
            calls: 0,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            sigma: 0.0,
            seed: 0,
            calls: 0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn next_model(&mut self) -> NoiseModel {
        let m = NoiseModel {
            sigma: self.sigma,
            seed: self.seed,
            stream: self.calls,
        };
        self.calls += 1;
        m
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }
}

/// Bookkeeping for one measurement.
#[derive(Debug, Clone)]
pub struct MeasurementRecord<T> {
    pub y: Vec<T>,
    pub matrix_id: String,
    pub noise: NoiseModel,
}

/// `a x + eps`. With `sigma == 0` the result is exactly `a x`.
pub fn measure<T: Scalar>(a: &DenseMatrix<T>, x: &[T], noise: &NoiseModel) -> Result<Vec<T>> {
    let mut y = a.matvec(x)?;
    if !noise.is_noiseless() {
        let eps = noise.sample(y.len());
        for (yi, e) in y.iter_mut().zip(eps) {
            *yi += T::from_f64(e);
        }
    }
    Ok(y)
}

/// Mean absolute deviation `(1/M) sum |y_ref - y_est|`.
pub fn residual_error<T: Scalar>(y_ref: &[T], y_est: &[T]) -> Result<T> {
    if y_ref.len() != y_est.len() {
        return Err(Error::dim(
            "residual_error",
            format!("lengths {} and {}", y_ref.len(), y_est.len()),
        ));
    }
    if y_ref.is_empty() {
        return Ok(T::zero());
    }
    let total: T = y_ref.iter().zip(y_est).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(total / T::from_f64(y_ref.len() as f64))
}

/// Peak signal-to-noise ratio for unit-range images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    /// Zero mean squared error.
    Exact,
    Db(f64),
}

impl Psnr {
    pub fn as_f64(self) -> f64 {
        match self {
            Psnr::Exact => f64::INFINITY,
            Psnr::Db(v) => v,
        }
    }
}

impl std::fmt::Display for Psnr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Psnr::Exact => f.write_str("exact"),
            Psnr::Db(v) => write!(f, "{v}"),
        }
    }
}

pub fn psnr<T: Scalar>(x_ref: &[T], x_est: &[T]) -> Result<Psnr> {
    if x_ref.len() != x_est.len() {
        return Err(Error::dim(
            "psnr",
            format!("lengths {} and {}", x_ref.len(), x_est.len()),
        ));
    }
    let n = x_ref.len().max(1) as f64;
    let mse = x_ref
        .iter()
        .zip(x_est)
        .map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(Psnr::Exact);
    }
    Ok(Psnr::Db(10.0 * (1.0 / mse).log10()))
}

/// Access to an unknown image that can only be observed by measuring it with a chosen matrix.
pub trait HiddenImage<T: Scalar> {
    fn measure_with(&mut self, a: &DenseMatrix<T>) -> Result<Vec<T>>;
}

/// Access to an unknown measurement matrix that can only be observed by measuring chosen images.
pub trait HiddenMatrix<T: Scalar> {
    fn measure(&mut self, x: &[T]) -> Result<Vec<T>>;
}

/// Simulated unknown image with noisy measurements and a call counter.
#[derive(Debug, Clone)]
pub struct SimulatedImage<T> {
    x: Vec<T>,
    noise: NoiseSource,
    calls: usize,
}

impl<T: Scalar> SimulatedImage<T> {
    pub fn new(x: Vec<T>, noise: NoiseSource) -> Self {
        Self { x, noise, calls: 0 }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    /// Ground truth, for evaluation only.
    pub fn truth(&self) -> &[T] {
        &self.x
    }
}

impl<T: Scalar> HiddenImage<T> for SimulatedImage<T> {
    fn measure_with(&mut self, a: &DenseMatrix<T>) -> Result<Vec<T>> {
        self.calls += 1;
        measure(a, &self.x, &self.noise.next_model())
    }
}

/// Simulated unknown matrix with noisy measurements and a call counter.
#[derive(Debug, Clone)]
pub struct SimulatedMatrix<T> {
    a: DenseMatrix<T>,
    noise: NoiseSource,
    calls: usize,
}

impl<T: Scalar> SimulatedMatrix<T> {
    pub fn new(a: DenseMatrix<T>, noise: NoiseSource) -> Self {
        Self { a, noise, calls: 0 }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    pub fn truth(&self) -> &DenseMatrix<T> {
        &self.a
    }
}

impl<T: Scalar> HiddenMatrix<T> for SimulatedMatrix<T> {
    fn measure(&mut self, x: &[T]) -> Result<Vec<T>> {
        self.calls += 1;
        measure(&self.a, x, &self.noise.next_model())
    }
}
