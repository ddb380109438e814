use crate::error::{Error, Result};

use super::Image;

/// Peak signal-to-noise ratio in dB for unit-peak images.
///
/// Identical inputs return `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Dimension(format!(
            "psnr needs equal shapes, got {}x{}x{} and {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_infinite() {
        let a = Image::filled(3, 3, 1, 0.3).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn zeros_vs_ones_is_zero_db() {
        let a = Image::filled(4, 4, 3, 0.0).unwrap();
        let b = Image::filled(4, 4, 3, 1.0).unwrap();
        assert_eq!(psnr(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_grids() {
        // a: all 0.5. b: sixteen values whose errors are 0.1 in four pixels and 0.2
        // in two pixels, zero elsewhere. MSE = (4*0.01 + 2*0.04) / 16 = 0.0075.
        let a = Image::filled(4, 4, 1, 0.5).unwrap();
        let mut vals = vec![0.5; 16];
        vals[0] = 0.6;
        vals[5] = 0.4;
        vals[10] = 0.6;
        vals[15] = 0.4;
        vals[3] = 0.7;
        vals[12] = 0.3;
        let b = Image::new(4, 4, 1, vals).unwrap();
        let expected = 10.0 * (1.0f64 / 0.0075).log10(); // 21.249387366...
        let got = psnr(&a, &b).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert!((got - 21.249_387_366_083).abs() < 1e-9);
    }

    #[test]
    fn symmetric() {
        let a =
            Image::from_fn(5, 4, 3, |x, y, c| ((x * 7 + y * 3 + c) % 11) as f64 / 10.0).unwrap();
        let b = Image::from_fn(5, 4, 3, |x, y, c| ((x * 5 + y + 2 * c) % 9) as f64 / 8.0).unwrap();
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn shape_mismatch_errors() {
        let a = Image::filled(3, 3, 1, 0.0).unwrap();
        let b = Image::filled(3, 3, 3, 0.0).unwrap();
        assert!(matches!(psnr(&a, &b), Err(Error::Dimension(_))));
    }
}
