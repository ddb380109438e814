use crate::error::{Error, Result};

use super::Image;

/// Edge handling for [`convolve2d`]. Only replicate padding is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Replicate,
}

/// Odd-sided, non-negative 2D weight grid (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 == 0 || height % 2 == 0 {
            return Err(Error::Dimension(format!(
                "kernel sides must be odd and positive, got {width}x{height}"
            )));
        }
        if weights.len() != width * height {
            return Err(Error::Dimension(format!(
                "kernel has {} weights, expected {}",
                weights.len(),
                width * height
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "kernel weights must be finite and non-negative".into(),
            ));
        }
        Ok(Kernel {
            width,
            height,
            weights,
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension("ragged kernel rows".into()));
        }
        Self::new(
            width,
            height,
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
    }

    pub fn identity() -> Self {
        Kernel {
            width: 1,
            height: 1,
            weights: vec![1.0],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Per-channel linear convolution with replicate padding; output is clamped to `[0, 1]`.
pub fn convolve2d(image: &Image, kernel: &Kernel, boundary: Boundary) -> Result<Image> {
    let raw = convolve_raw(image, kernel, boundary)?;
    Ok(image.with_samples(raw))
}

pub(crate) fn convolve_raw(
    image: &Image,
    kernel: &Kernel,
    _boundary: Boundary,
) -> Result<Vec<f64>> {
    if image.is_empty() {
        return Err(Error::Dimension("cannot convolve an empty image".into()));
    }
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let rx = (kernel.width / 2) as isize;
    let ry = (kernel.height / 2) as isize;
    let src = image.data();
    let mut out = vec![0.0; src.len()];

    // Skip zero taps; motion PSFs are mostly empty.
    let taps: Vec<(isize, isize, f64)> = (0..kernel.height)
        .flat_map(|ky| (0..kernel.width).map(move |kx| (kx, ky)))
        .filter_map(|(kx, ky)| {
            let wgt = kernel.weight(kx, ky);
            (wgt != 0.0).then_some((kx as isize - rx, ky as isize - ry, wgt))
        })
        .collect();

    for y in 0..h {
        for x in 0..w {
            let base = (y * w + x) * ch;
            for &(dx, dy, wgt) in &taps {
                // out(x) = sum_u k(u) * in(x - u)
                let sx = (x as isize - dx).clamp(0, w as isize - 1) as usize;
                let sy = (y as isize - dy).clamp(0, h as isize - 1) as usize;
                let sbase = (sy * w + sx) * ch;
                for c in 0..ch {
                    out[base + c] += wgt * src[sbase + c];
                }
            }
        }
    }
    Ok(out)
}
