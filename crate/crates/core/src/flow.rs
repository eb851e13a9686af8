//! Dense 2D displacement fields.

use crate::error::{Error, Result};
use crate::Float;

/// Per-pixel displacement in pixels: `(dx, dy)` interleaved, row-major.
///
/// `at(x, y)` is the displacement of the pixel at `(x, y)`; its target
/// position is `(x + dx, y + dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField<T: Float> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Float> FlowField<T> {
    /// Zero displacement everywhere.
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![T::zero(); width * height * 2],
        }
    }

    /// Same `(dx, dy)` at every pixel.
    pub fn constant(width: usize, height: usize, dx: T, dy: T) -> Self {
        let mut data = Vec::with_capacity(width * height * 2);
        for _ in 0..width * height {
            data.push(dx);
            data.push(dy);
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Wraps an interleaved `(dx, dy)` buffer.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height * 2 {
            return Err(Error::BufferLength {
                width,
                height,
                channels: 2,
                got: data.len(),
            });
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
    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (T, T) {
        debug_assert!(x < self.width && y < self.height);
        let i = (y * self.width + x) * 2;
        (self.data[i], self.data[i + 1])
    }

    #[inline]
    pub fn dx(&self, x: usize, y: usize) -> T {
        self.at(x, y).0
    }

    #[inline]
    pub fn dy(&self, x: usize, y: usize) -> T {
        self.at(x, y).1
    }

    #[inline]
    pub(crate) fn set(&mut self, x: usize, y: usize, dx: T, dy: T) {
        debug_assert!(x < self.width && y < self.height);
        let i = (y * self.width + x) * 2;
        self.data[i] = dx;
        self.data[i + 1] = dy;
    }

    /// Displacement magnitude `|u|` at a pixel.
    #[inline]
    pub fn magnitude(&self, x: usize, y: usize) -> T {
        let (dx, dy) = self.at(x, y);
        (dx * dx + dy * dy).sqrt()
    }

    /// Every component multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.width, self.height)
    }

    pub(crate) fn scale_in_place(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub(crate) fn add_scaled_in_place(&mut self, other: &Self, s: T) {
        debug_assert_eq!(self.width, other.width);
        debug_assert_eq!(self.height, other.height);
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }
}
