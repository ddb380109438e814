use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{Boundary, Image};

use super::psf::PsfKernel;

/// Parameters of the Poisson-Gaussian sensor model.
///
/// `gain` scales intensity to expected photon counts before the Poisson draw;
/// the draw is divided by `gain` again so the result stays on the `[0, 1]` scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub gain: f64,
    pub read_sigma: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sensor gain must be > 0, got {}",
                self.gain
            )));
        }
        if !(self.read_sigma >= 0.0) || !self.read_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "read noise sigma must be >= 0, got {}",
                self.read_sigma
            )));
        }
        Ok(())
    }
}

fn gaussian(sigma: f64) -> Result<Option<Normal<f64>>> {
    if sigma == 0.0 {
        return Ok(None);
    }
    Normal::new(0.0, sigma)
        .map(Some)
        .map_err(|e| Error::InvalidParameter(format!("gaussian sigma {sigma}: {e}")))
}

/// PSF convolution plus additive zero-mean Gaussian noise, clamped once at the end.
pub fn apply_motion_blur(
    image: &Image,
    psf: &PsfKernel,
    epsilon_sigma: f64,
    seed: u64,
) -> Result<Image> {
    if !(epsilon_sigma >= 0.0) || !epsilon_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon sigma must be >= 0, got {epsilon_sigma}"
        )));
    }
    let mut raw = crate::imaging::convolve::convolve_raw(image, psf.kernel(), Boundary::Replicate)?;
    if let Some(normal) = gaussian(epsilon_sigma)? {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut raw {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(image.with_samples(raw))
}

/// Per pixel: `Poisson(g * I) / g + N(0, sigma^2)`, clamped.
pub fn apply_sensor_noise(image: &Image, params: &NoiseParams) -> Result<Image> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let read = gaussian(params.read_sigma)?;
    let g = params.gain;
    let mut out = Vec::with_capacity(image.len());
    for &v in image.data() {
        let mean = g * v;
        let photons = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::InvalidParameter(format!("poisson mean {mean}: {e}")))?
                .sample(&mut rng)
        } else {
            0.0
        };
        let mut s = photons / g;
        if let Some(n) = &read {
            s += n.sample(&mut rng);
        }
        out.push(s);
    }
    Ok(image.with_samples(out))
}

/// Zeroes a seeded random subset of pixel sites (all channels).
pub fn apply_dead_pixels(image: &Image, fraction: f64, seed: u64) -> Result<Image> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "dead pixel fraction must be in [0,1], got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = image.channels();
    let mut out = image.data().to_vec();
    for site in out.chunks_mut(ch) {
        if rng.random::<f64>() < fraction {
            site.fill(0.0);
        }
    }
    Ok(image.with_samples(out))
}

/// Adds one seeded Gaussian offset per column (column fixed-pattern noise).
pub fn apply_fixed_pattern(image: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "fixed-pattern sigma must be >= 0, got {sigma}"
        )));
    }
    let Some(normal) = gaussian(sigma)? else {
        return Ok(image.clone());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<f64> = (0..image.width())
        .map(|_| normal.sample(&mut rng))
        .collect();
    let (w, ch) = (image.width(), image.channels());
    let out = image
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| v + offsets[(i / ch) % w])
        .collect();
    Ok(image.with_samples(out))
}
