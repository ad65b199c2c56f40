//! Fully populated 8-bit luminance frames.
//!
//! Coordinates are `(m, n)` = (row, column) on the high-resolution grid and
//! storage is row-major, so "row-major order" everywhere in this crate is
//! plain lexicographic order on `(m, n)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "frame dimensions must be non-zero, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fill a {width}x{height} frame",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a frame by evaluating `f(m, n)` at every position.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for m in 0..height {
            for n in 0..width {
                values.push(f(m, n));
            }
        }
        Self::new(width, height, values)
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
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> u8 {
        self.values[m * self.width + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: u8) {
        self.values[m * self.width + n] = v;
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn into_values(self) -> Vec<u8> {
        self.values
    }
}
