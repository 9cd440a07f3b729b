//! Synthetic measurement matrices and phantom images.

use crate::image::Image;
use crate::numeric::{DenseMatrix, Scalar};
use crate::rng::NormalStream;

/// Matrix with i.i.d. standard normal entries, filled row-major.
pub fn gaussian_matrix<T: Scalar>(
    rng: &mut NormalStream,
    rows: usize,
    cols: usize,
) -> DenseMatrix<T> {
    DenseMatrix::from_fn(rows, cols, |_, _| T::from_f64(rng.next_normal()))
}

/// `rho * known + sqrt(1 - rho^2) * G` with fresh Gaussian `G`; `rho = 0` gives an independent matrix.
pub fn correlated_matrix<T: Scalar>(
    rng: &mut NormalStream,
    known: &DenseMatrix<T>,
    rho: f64,
) -> DenseMatrix<T> {
    let rho = rho.clamp(-1.0, 1.0);
    let mix = (1.0 - rho * rho).sqrt();
    DenseMatrix::from_fn(known.rows(), known.cols(), |i, j| {
        T::from_f64(rho * known[(i, j)].as_f64() + mix * rng.next_normal())
    })
}

pub fn constant(height: usize, width: usize, level: f64) -> Image {
    Image::new(height, width, vec![level; height * width])
}

/// Smooth image: gray background plus a few signed Gaussian bumps, clamped to `[0, 1]`.
pub fn blobs(height: usize, width: usize, rng: &mut NormalStream) -> Image {
    let count = 4;
    let bumps: Vec<(f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            let cy = rng.next_uniform() * height as f64;
            let cx = rng.next_uniform() * width as f64;
            let radius = (0.12 + 0.2 * rng.next_uniform()) * height.max(width) as f64;
            let amp = 0.6 * (rng.next_uniform() - 0.5) * 2.0;
            (cy, cx, radius, amp)
        })
        .collect();
    let pixels = (0..height * width)
        .map(|p| {
            let (y, x) = ((p / width) as f64, (p % width) as f64);
            let v = bumps.iter().fold(0.5, |acc, &(cy, cx, r, a)| {
                let d2 = (y - cy).powi(2) + (x - cx).powi(2);
                acc + a * (-d2 / (2.0 * r * r)).exp()
            });
            v.clamp(0.0, 1.0)
        })
        .collect();
    Image::new(height, width, pixels)
}

/// Sinusoidal stripes `0.5 + 0.5 sin(2 pi f x / w + phase)`.
pub fn stripes(height: usize, width: usize, frequency: f64, phase: f64) -> Image {
    let pixels = (0..height * width)
        .map(|p| {
            let x = (p % width) as f64;
            0.5 + 0.5 * (std::f64::consts::TAU * frequency * x / width as f64 + phase).sin()
        })
        .collect();
    Image::new(height, width, pixels)
}

/// Uniform random pixels in `[lo, hi)`; a stand-in for a speckle-like texture.
pub fn speckle(height: usize, width: usize, lo: f64, hi: f64, rng: &mut NormalStream) -> Image {
    let pixels = (0..height * width)
        .map(|_| lo + (hi - lo) * rng.next_uniform())
        .collect();
    Image::new(height, width, pixels)
}

/// Filled disk of value `inside` on a background of `outside`.
pub fn disk(height: usize, width: usize, radius: f64, inside: f64, outside: f64) -> Image {
    let (cy, cx) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
    let pixels = (0..height * width)
        .map(|p| {
            let (y, x) = ((p / width) as f64, (p % width) as f64);
            if (y - cy).powi(2) + (x - cx).powi(2) <= radius * radius {
                inside
            } else {
                outside
            }
        })
        .collect();
    Image::new(height, width, pixels)
}

pub fn checker(height: usize, width: usize, cell: usize, lo: f64, hi: f64) -> Image {
    let cell = cell.max(1);
    let pixels = (0..height * width)
        .map(|p| {
            let (y, x) = (p / width, p % width);
            if (y / cell + x / cell).is_multiple_of(2) {
                hi
            } else {
                lo
            }
        })
        .collect();
    Image::new(height, width, pixels)
}

/// Diagonal ramp from `lo` to `hi`.
pub fn gradient(height: usize, width: usize, lo: f64, hi: f64) -> Image {
    let denom = (height + width).saturating_sub(2).max(1) as f64;
    let pixels = (0..height * width)
        .map(|p| lo + (hi - lo) * ((p / width + p % width) as f64 / denom))
        .collect();
    Image::new(height, width, pixels)
}

/// `k` distinct random pixels with values in `[0.5, 1)`, zero elsewhere.
pub fn sparse(height: usize, width: usize, k: usize, rng: &mut NormalStream) -> Image {
    let n = height * width;
    let mut pixels = vec![0.0; n];
    let mut placed = 0;
    while placed < k.min(n) {
        let idx = ((rng.next_uniform() * n as f64) as usize).min(n - 1);
        if pixels[idx] == 0.0 {
            pixels[idx] = 0.5 + 0.5 * rng.next_uniform();
            placed += 1;
        }
    }
    Image::new(height, width, pixels)
}

/// The seven bundled test images used by the image-set experiments.
pub fn image_set(height: usize, width: usize, seed: u64) -> Vec<(String, Image)> {
    let mut rng = NormalStream::new(seed, 0);
    let r = height.min(width) as f64 / 3.0;
    vec![
        ("disk".into(), disk(height, width, r, 0.9, 0.3)),
        (
            "checker".into(),
            checker(height, width, (width / 4).max(1), 0.25, 0.75),
        ),
        ("gradient".into(), gradient(height, width, 0.1, 0.9)),
        ("stripes".into(), stripes(height, width, 2.0, 0.3)),
        ("blobs-a".into(), blobs(height, width, &mut rng)),
        ("blobs-b".into(), blobs(height, width, &mut rng)),
        ("blobs-c".into(), blobs(height, width, &mut rng)),
    ]
}
