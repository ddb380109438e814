//! Physics-inspired frame corruption: trajectory-rendered motion blur,
//! Poisson-Gaussian sensor noise, block-transform compression, and the
//! per-episode corruption schedule.

mod codec;
mod noise;
mod pipeline;
mod psf;
mod schedule;
mod taxonomy;

pub use codec::{
    apply_compression, CompressionBackend, CompressionLevel, ExternalCodec, QuantizationMap,
    BITRATE_LEVELS,
};
pub use noise::{
    apply_dead_pixels, apply_fixed_pattern, apply_motion_blur, apply_sensor_noise, NoiseParams,
};
pub use pipeline::{corrupt_frame, Severity};
pub use psf::{render_psf, render_psf_with, MotionTrajectory, Projection, PsfKernel};
pub use schedule::{corruption_mask, DegradationSchedule, Regime};
pub use taxonomy::{Category, DegradationType, OperatorFamily};

use serde::{Deserialize, Serialize};

/// Record of one operator applied to a frame. Stored on [`crate::imaging::Frame`]
/// and in run records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AppliedOp {
    MotionBlur {
        kind: DegradationType,
        extent: f64,
        side: usize,
        epsilon_sigma: f64,
    },
    Defocus {
        kind: DegradationType,
        radius: f64,
        side: usize,
    },
    SensorNoise {
        kind: DegradationType,
        gain: f64,
        read_sigma: f64,
    },
    DeadPixels {
        fraction: f64,
    },
    FixedPattern {
        sigma: f64,
    },
    Compression {
        kind: DegradationType,
        bitrate: u8,
        backend: String,
    },
}
