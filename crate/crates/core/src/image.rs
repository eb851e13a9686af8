//! Dense image and mask containers.
//!
//! Pixels live on an integer grid; pixel `(x, y)` sits at continuous
//! coordinate `(x, y)`, so the image domain is `[0, W-1] x [0, H-1]`.
//! Data is row-major with interleaved channels: `data[(y*W + x)*C + c]`.

use crate::error::{Error, Result};
use crate::Float;

/// Intensity image with 1 (grayscale) or 3 (RGB) channels.
///
/// Treat values as scene intensities in `[0, 1]` for metrics and PNG export;
/// intermediate tensors (gradients, residuals) may hold any finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T: Float> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Float> Image<T> {
    /// Zero-filled image.
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::constant(width, height, channels, T::zero())
    }

    /// Image filled with `value`.
    pub fn constant(width: usize, height: usize, channels: usize, value: T) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimension {
                width,
                height,
                min: 1,
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        })
    }

    /// Wraps an existing row-major interleaved buffer.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimension {
                width,
                height,
                min: 1,
            });
        }
        if data.len() != width * height * channels {
            return Err(Error::BufferLength {
                width,
                height,
                channels,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(width, height, channels)` triple, handy for shape checks.
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> T {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub(crate) fn set(&mut self, x: usize, y: usize, c: usize, v: T) {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    #[inline]
    pub(crate) fn add_at(&mut self, x: usize, y: usize, c: usize, v: T) {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c] += v;
    }

    /// True when every sample is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Same shape as `self`, zero-filled.
    pub fn zeros_like(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: vec![T::zero(); self.data.len()],
        }
    }

    /// Elementwise map.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two same-shape images.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                context: "zip_map",
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub(crate) fn scale_in_place(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub(crate) fn add_scaled_in_place(&mut self, other: &Self, s: T) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }
}

/// Per-pixel weight map with values in `[0, 1]`; single channel.
///
/// Coverage and occlusion masks in this crate are binary (exactly 0 or 1)
/// but the container allows fractional weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask<T: Float> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Float> Mask<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![T::zero(); width * height],
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![T::one(); width * height],
        }
    }

    /// Wraps a buffer of weights, which must already lie in `[0, 1]`.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BufferLength {
                width,
                height,
                channels: 1,
                got: data.len(),
            });
        }
        if data
            .iter()
            .any(|&v| !(v >= T::zero() && v <= T::one()))
        {
            return Err(Error::InvalidConfig(
                "mask values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub(crate) fn set(&mut self, x: usize, y: usize, v: T) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    /// Sum of all weights.
    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Elementwise product of two same-size masks.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch {
                context: "mask product",
                expected: (self.width, self.height, 1),
                got: (other.width, other.height, 1),
            });
        }
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| a * b)
                .collect(),
        })
    }
}
