use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Grayscale image with pixels flattened row-major into the signal vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Panics if `pixels.len() != height * width`; use [`Image::try_new`] for untrusted input.
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Self {
        Self::try_new(height, width, pixels).expect("image shape")
    }

    pub fn try_new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::dim(
                "Image",
                format!(
                    "{height}x{width} needs {} pixels, got {}",
                    height * width,
                    pixels.len()
                ),
            ));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn to_vector<T: Scalar>(&self) -> Vec<T> {
        self.pixels.iter().map(|&p| T::from_f64(p)).collect()
    }

    pub fn from_vector<T: Scalar>(height: usize, width: usize, v: &[T]) -> Result<Self> {
        Self::try_new(height, width, v.iter().map(|x| x.as_f64()).collect())
    }

    /// Copy with every pixel clamped to `[0, 1]`.
    pub fn clamped(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|p| p.clamp(0.0, 1.0)).collect(),
        }
    }
}
