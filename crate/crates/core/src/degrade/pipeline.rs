use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imaging::{Frame, Image};
use crate::seed::derive_seed;

use super::codec::{apply_compression, CompressionBackend, CompressionLevel};
use super::noise::{
    apply_dead_pixels, apply_fixed_pattern, apply_motion_blur, apply_sensor_noise, NoiseParams,
};
use super::psf::{render_psf, MotionTrajectory};
use super::taxonomy::{DegradationType, OperatorFamily};
use super::AppliedOp;

const SHAKE_SAMPLES: usize = 24;
const DISK_RINGS: usize = 3;

/// Concrete operator strengths for one corrupted frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Severity {
    pub lambda: f64,
    /// Blur extent in pixels (trajectory sweep length, or twice the disk radius).
    pub motion_extent: f64,
    /// Poisson scale of the sensor model.
    pub photon_gain: f64,
    pub read_sigma: f64,
    pub bitrate: u8,
    #[serde(default)]
    pub epsilon_sigma: f64,
}

fn odd_side(reach: f64) -> usize {
    2 * (reach.ceil() as usize + 1) + 1
}

/// Applies every operator family named by `tags` once, optics first, then the
/// sensor, then the codec, and returns the frame with its provenance.
pub fn corrupt_frame(
    index: usize,
    image: &Image,
    severity: &Severity,
    tags: &[DegradationType],
    backend: &CompressionBackend,
    seed: u64,
) -> Result<Frame> {
    let mut families: Vec<(OperatorFamily, DegradationType)> = Vec::new();
    for &tag in tags {
        if !families.iter().any(|(f, _)| *f == tag.family()) {
            families.push((tag.family(), tag));
        }
    }
    families.sort_by_key(|(f, _)| *f);

    let mut img = image.clone();
    let mut ops = Vec::with_capacity(families.len());
    for (i, (family, kind)) in families.into_iter().enumerate() {
        let op_seed = derive_seed(seed, &[i as u64]);
        match family {
            OperatorFamily::TrajectoryPsf => {
                let extent = severity.motion_extent;
                let traj = MotionTrajectory::synthetic_shake(extent, SHAKE_SAMPLES, op_seed)?;
                let side = odd_side(0.6 * extent);
                let psf = render_psf(&traj, side, 1.0)?;
                img = apply_motion_blur(
                    &img,
                    &psf,
                    severity.epsilon_sigma,
                    derive_seed(op_seed, &[1]),
                )?;
                ops.push(AppliedOp::MotionBlur {
                    kind,
                    extent,
                    side,
                    epsilon_sigma: severity.epsilon_sigma,
                });
            }
            OperatorFamily::DiskPsf => {
                let radius = 0.5 * severity.motion_extent;
                let side = odd_side(radius);
                let psf = render_psf(&MotionTrajectory::disk(radius, DISK_RINGS)?, side, 1.0)?;
                img = apply_motion_blur(&img, &psf, 0.0, op_seed)?;
                ops.push(AppliedOp::Defocus { kind, radius, side });
            }
            OperatorFamily::SensorNoise => {
                let params = NoiseParams {
                    gain: severity.photon_gain,
                    read_sigma: severity.read_sigma,
                    seed: op_seed,
                };
                img = apply_sensor_noise(&img, &params)?;
                ops.push(AppliedOp::SensorNoise {
                    kind,
                    gain: severity.photon_gain,
                    read_sigma: severity.read_sigma,
                });
            }
            OperatorFamily::DeadPixelMask => {
                let fraction = 0.02 * severity.lambda;
                img = apply_dead_pixels(&img, fraction, op_seed)?;
                ops.push(AppliedOp::DeadPixels { fraction });
            }
            OperatorFamily::FixedPattern => {
                let sigma = 0.05 * severity.lambda;
                img = apply_fixed_pattern(&img, sigma, op_seed)?;
                ops.push(AppliedOp::FixedPattern { sigma });
            }
            OperatorFamily::BlockCodec => {
                let level = CompressionLevel {
                    bitrate: severity.bitrate,
                    backend: backend.clone(),
                };
                img = apply_compression(&img, &level)?;
                ops.push(AppliedOp::Compression {
                    kind,
                    bitrate: severity.bitrate,
                    backend: backend.name().to_string(),
                });
            }
        }
    }
    Frame::corrupted(index, img, ops)
}
