//! Corrupts one rendered frame at increasing severity and reports image
//! quality plus the operators that were applied.
//!
//! Pass a directory to also write the corrupted frames as PNG files.

use persistbench::calibrate::{map_to_params, CalibratorConfig};
use persistbench::degrade::{corrupt_frame, CompressionBackend, DegradationType};
use persistbench::harness::{generate_scene, SceneSpec};
use persistbench::imaging::{psnr, save_image};

fn main() -> persistbench::Result<()> {
    let out_dir = std::env::args().nth(1);
    let (frames, _) = generate_scene(&SceneSpec::default(), 1, 3)?;
    let clean = &frames[0];
    let calibrator = CalibratorConfig::default();
    let tags = [
        DegradationType::MotionBlur,
        DegradationType::LowLightNoise,
        DegradationType::BlockArtifacts,
    ];

    for step in 0..=4 {
        let lambda = step as f64 / 4.0;
        let params = map_to_params(&calibrator, lambda);
        let frame = corrupt_frame(
            0,
            clean,
            &params.severity(&calibrator),
            &tags,
            &CompressionBackend::default(),
            42,
        )?;
        println!(
            "lambda {lambda:.2}: blur {:.1}px, gain {:.1}x, {} Mbps -> PSNR {:.2} dB",
            params.motion_sigma,
            params.gain,
            params.bitrate,
            psnr(clean, &frame.image)?
        );
        for op in frame.applied_ops() {
            println!("    {}", serde_json::to_string(op)?);
        }
        if let Some(dir) = &out_dir {
            save_image(&frame.image, format!("{dir}/lambda_{step}.png"))?;
        }
    }
    Ok(())
}
