//! Raster containers shared by every stage of the pipeline.
//!
//! Both containers are row-major with `(u, v)` = (column, row). Color images
//! hold sRGB-encoded channel values scaled to `[0, 1]`; compositing treats
//! them as-is (gamma 1).

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

/// An RGB raster with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from interleaved RGB data.
    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "image data has {} values, expected {}",
                data.len(),
                width * height * 3
            )));
        }
        if let Some(bad) = data.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::invalid(format!(
                "image channel value {bad} outside [0, 1]"
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        let data = std::iter::repeat_n(color, width * height)
            .flatten()
            .map(|c| c.clamp(0.0, 1.0))
            .collect();
        Image {
            width,
            height,
            data,
        }
    }

    /// Builds an image by evaluating `f(u, v)` at every pixel. Output is
    /// clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for v in 0..height {
            for u in 0..width {
                data.extend(f(u, v).iter().map(|c| c.clamp(0.0, 1.0)));
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, u: usize, v: usize) -> Rgb {
        self.pixel_at(v * self.width + u)
    }

    #[inline]
    pub fn pixel_at(&self, index: usize) -> Rgb {
        let i = index * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Overwrites a pixel, clamping channels into `[0, 1]`.
    pub fn set_pixel(&mut self, u: usize, v: usize, color: Rgb) {
        let i = (v * self.width + u) * 3;
        for (dst, c) in self.data[i..i + 3].iter_mut().zip(color) {
            *dst = c.clamp(0.0, 1.0);
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = Rgb> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }
}

/// A single-channel raster with a per-pixel validity mask.
///
/// Holds disparity (pixels), depth and distance (meters) or transmission.
/// The complement of `valid` is the missing-pixel set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl ScalarField {
    /// A fully valid field.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::with_mask(width, height, values, valid)
    }

    /// A field with an explicit validity mask. Values at valid pixels must be
    /// finite; values at invalid pixels are ignored.
    pub fn with_mask(width: usize, height: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if values.len() != n || valid.len() != n {
            return Err(Error::invalid(format!(
                "field of {width}x{height} needs {n} values and mask entries, got {} and {}",
                values.len(),
                valid.len()
            )));
        }
        if values.iter().zip(&valid).any(|(x, &ok)| ok && !x.is_finite()) {
            return Err(Error::invalid("non-finite value at a valid pixel"));
        }
        Ok(ScalarField {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        ScalarField {
            width,
            height,
            values: vec![value; width * height],
            valid: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                values.push(f(u, v));
            }
        }
        ScalarField {
            width,
            height,
            values,
            valid: vec![true; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let i = v * self.width + u;
        self.valid[i].then(|| self.values[i])
    }

    #[inline]
    pub fn value(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[v * self.width + u]
    }

    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|ok| !**ok).count()
    }

    pub fn is_complete(&self) -> bool {
        self.valid.iter().all(|ok| *ok)
    }

    /// Replaces the validity mask, keeping values.
    pub fn with_valid(mut self, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != self.values.len() {
            return Err(Error::invalid("mask length does not match field"));
        }
        if self.values.iter().zip(&valid).any(|(x, &ok)| ok && !x.is_finite()) {
            return Err(Error::invalid("non-finite value at a valid pixel"));
        }
        self.valid = valid;
        Ok(self)
    }

    /// Applies `f` to every valid value; invalid pixels stay invalid.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&self.valid)
            .map(|(&x, &ok)| if ok { f(x) } else { x })
            .collect();
        ScalarField {
            width: self.width,
            height: self.height,
            values,
            valid: self.valid.clone(),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        let (sum, n) = self
            .values
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .fold((0.0, 0usize), |(s, n), (x, _)| (s + x, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<bool>) {
        (self.values, self.valid)
    }
}

pub(crate) fn check_dims(what: &'static str, a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            what,
            left_w: a.0,
            left_h: a.1,
            right_w: b.0,
            right_h: b.1,
        });
    }
    Ok(())
}
