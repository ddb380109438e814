//! Quality of the block-transform codec at each bitrate level.

use persistbench::degrade::{apply_compression, CompressionLevel, QuantizationMap, BITRATE_LEVELS};
use persistbench::imaging::{psnr, Image};

fn main() -> persistbench::Result<()> {
    let image = Image::from_fn(64, 64, 3, |x, y, c| {
        let (fx, fy) = (x as f64 / 64.0, y as f64 / 64.0);
        (0.5 + 0.3 * (9.0 * fx + 2.0 * c as f64).sin() * (7.0 * fy).cos()).clamp(0.0, 1.0)
    })?;
    let steps = QuantizationMap::default();
    for b in BITRATE_LEVELS {
        let decoded = apply_compression(&image, &CompressionLevel::surrogate(b))?;
        println!(
            "{b} Mbps  step {:>4}  PSNR {:6.2} dB",
            steps.step(b)?,
            psnr(&image, &decoded)?
        );
    }
    Ok(())
}
