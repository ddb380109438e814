//! Pixel-level primitives shared by every degradation operator.
//!
//! Images hold normalized intensities in `[0, 1]`, row-major and
//! channel-interleaved. Public operations clamp once on the way out so that
//! the internal arithmetic stays linear.

pub(crate) mod convolve;
pub(crate) mod io;
mod quality;

pub use convolve::{convolve2d, Boundary, Kernel};
pub use io::{load_image, save_image};
pub use quality::psnr;

use serde::{Deserialize, Serialize};

use crate::degrade::AppliedOp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from interleaved samples, clamping every value into `[0, 1]`.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Dimension(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "data length {} does not match {width}x{height}x{channels} = {expected}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("image data must be finite".into()));
        }
        let mut img = Image {
            width,
            height,
            channels,
            data,
        };
        img.clamp_in_place();
        Ok(img)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// Samples `f(x, y, channel)` for every position.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y, c)]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Replaces the samples, keeping the shape. Values are clamped.
    pub(crate) fn with_samples(&self, data: Vec<f64>) -> Image {
        debug_assert_eq!(data.len(), self.data.len());
        let mut img = Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        };
        img.clamp_in_place();
        img
    }

    fn clamp_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// One time step of an episode, with clean/corrupted provenance.
#[derive(Debug, Clone)]
pub struct Frame {
    pub index: usize,
    pub image: Image,
    is_corrupted: bool,
    applied_ops: Vec<AppliedOp>,
}

impl Frame {
    pub fn clean(index: usize, image: Image) -> Self {
        Frame {
            index,
            image,
            is_corrupted: false,
            applied_ops: Vec::new(),
        }
    }

    pub fn corrupted(index: usize, image: Image, applied_ops: Vec<AppliedOp>) -> Result<Self> {
        if applied_ops.is_empty() {
            return Err(Error::Validation(format!(
                "corrupted frame {index} must list at least one applied operation"
            )));
        }
        Ok(Frame {
            index,
            image,
            is_corrupted: true,
            applied_ops,
        })
    }

    pub fn is_corrupted(&self) -> bool {
        self.is_corrupted
    }

    pub fn applied_ops(&self) -> &[AppliedOp] {
        &self.applied_ops
    }
}

#[derive(Debug, Clone)]
pub struct Sequence {
    frames: Vec<Frame>,
}

impl Sequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Validation(
                "sequence needs at least one frame".into(),
            ));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.index != i {
                return Err(Error::Validation(format!(
                    "frame at position {i} has index {}, expected {i}",
                    f.index
                )));
            }
        }
        Ok(Sequence { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// Shape descriptor used in records and CLI output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl From<&Image> for Shape {
    fn from(img: &Image) -> Self {
        Shape {
            width: img.width,
            height: img.height,
            channels: img.channels,
        }
    }
}
