use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};

use super::Image;

/// Reads a PNG (8 or 16 bit) or JPEG file into normalized intensities.
///
/// Alpha channels are dropped; gray+alpha becomes one channel and RGBA three.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|source| Error::ImageFormat {
        path: path.to_path_buf(),
        source,
    })?;
    from_dynamic(decoded).map_err(|e| match e {
        Error::InvalidParameter(msg) => Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::Unsupported, msg),
        ),
        other => other,
    })
}

fn from_dynamic(img: DynamicImage) -> Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(b) => norm8(w, h, 1, b.into_raw()),
        DynamicImage::ImageLumaA8(_) => norm8(w, h, 1, img.to_luma8().into_raw()),
        DynamicImage::ImageRgb8(b) => norm8(w, h, 3, b.into_raw()),
        DynamicImage::ImageRgba8(_) => norm8(w, h, 3, img.to_rgb8().into_raw()),
        DynamicImage::ImageLuma16(b) => norm16(w, h, 1, b.into_raw()),
        DynamicImage::ImageLumaA16(_) => norm16(w, h, 1, img.to_luma16().into_raw()),
        DynamicImage::ImageRgb16(b) => norm16(w, h, 3, b.into_raw()),
        DynamicImage::ImageRgba16(_) => norm16(w, h, 3, img.to_rgb16().into_raw()),
        DynamicImage::ImageRgb32F(b) => {
            Image::new(w, h, 3, b.into_raw().into_iter().map(f64::from).collect())
        }
        DynamicImage::ImageRgba32F(_) => Image::new(
            w,
            h,
            3,
            img.to_rgb32f()
                .into_raw()
                .into_iter()
                .map(f64::from)
                .collect(),
        ),
        other => Err(Error::InvalidParameter(format!(
            "unsupported pixel layout {:?}",
            other.color()
        ))),
    }
}

fn norm8(w: usize, h: usize, c: usize, raw: Vec<u8>) -> Result<Image> {
    Image::new(
        w,
        h,
        c,
        raw.into_iter().map(|v| f64::from(v) / 255.0).collect(),
    )
}

fn norm16(w: usize, h: usize, c: usize, raw: Vec<u16>) -> Result<Image> {
    Image::new(
        w,
        h,
        c,
        raw.into_iter().map(|v| f64::from(v) / 65535.0).collect(),
    )
}

fn quantize16(image: &Image) -> Vec<u16> {
    image
        .data()
        .iter()
        .map(|v| (v * 65535.0).round() as u16)
        .collect()
}

/// Writes a 16-bit PNG. Only the `.png` extension is accepted.
///
/// Intensities on the 1/65535 grid survive a save/load round trip bit-exactly.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if !is_png {
        return Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::Unsupported,
                "only PNG output is supported",
            ),
        ));
    }
    let (w, h) = (image.width() as u32, image.height() as u32);
    let raw = quantize16(image);
    let result = if image.channels() == 1 {
        ImageBuffer::<Luma<u16>, _>::from_raw(w, h, raw)
            .expect("shape checked at construction")
            .save_with_format(path, ImageFormat::Png)
    } else {
        ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, raw)
            .expect("shape checked at construction")
            .save_with_format(path, ImageFormat::Png)
    };
    result.map_err(|source| Error::ImageFormat {
        path: path.to_path_buf(),
        source,
    })
}

/// Encodes an 8-bit PNG in memory, as sent to model endpoints.
pub(crate) fn encode_png8(image: &Image) -> Vec<u8> {
    let (w, h) = (image.width() as u32, image.height() as u32);
    let raw: Vec<u8> = image
        .data()
        .iter()
        .map(|v| (v * 255.0).round() as u8)
        .collect();
    let dynimg = if image.channels() == 1 {
        DynamicImage::ImageLuma8(ImageBuffer::from_raw(w, h, raw).expect("shape"))
    } else {
        DynamicImage::ImageRgb8(ImageBuffer::from_raw(w, h, raw).expect("shape"))
    };
    let mut out = Cursor::new(Vec::new());
    dynimg
        .write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}
