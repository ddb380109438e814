use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{load_image, save_image, Image};

/// The five bitrate levels, in Mbps.
pub const BITRATE_LEVELS: [u8; 5] = [1, 2, 3, 4, 5];

const BLOCK: usize = 8;

/// Quantizer step per bitrate level, on the 0-255 intensity scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationMap {
    /// `steps[b - 1]` is the step for bitrate `b`.
    pub steps: [f64; 5],
}

impl Default for QuantizationMap {
    /// `q(B) = round(64 / B)`: 64, 32, 21, 16, 13.
    fn default() -> Self {
        let mut steps = [0.0; 5];
        for (i, s) in steps.iter_mut().enumerate() {
            *s = (64.0 / (i + 1) as f64).round();
        }
        QuantizationMap { steps }
    }
}

impl QuantizationMap {
    pub fn step(&self, bitrate: u8) -> Result<f64> {
        check_bitrate(bitrate)?;
        Ok(self.steps[bitrate as usize - 1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "quantizer steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Encoder/decoder pair following the
/// `<encoder> -in <png> -bitrate <Mbps> -out <bitstream>` /
/// `<decoder> -in <bitstream> -out <png>` contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCodec {
    pub encoder: PathBuf,
    pub decoder: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum CompressionBackend {
    Surrogate {
        #[serde(default)]
        quantization: QuantizationMap,
    },
    External(ExternalCodec),
}

impl Default for CompressionBackend {
    fn default() -> Self {
        CompressionBackend::Surrogate {
            quantization: QuantizationMap::default(),
        }
    }
}

impl CompressionBackend {
    pub fn name(&self) -> &'static str {
        match self {
            CompressionBackend::Surrogate { .. } => "surrogate",
            CompressionBackend::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionLevel {
    pub bitrate: u8,
    #[serde(default)]
    pub backend: CompressionBackend,
}

impl CompressionLevel {
    pub fn surrogate(bitrate: u8) -> Self {
        CompressionLevel {
            bitrate,
            backend: CompressionBackend::default(),
        }
    }
}

fn check_bitrate(bitrate: u8) -> Result<()> {
    if !BITRATE_LEVELS.contains(&bitrate) {
        return Err(Error::InvalidParameter(format!(
            "bitrate must be one of 1..=5 Mbps, got {bitrate}"
        )));
    }
    Ok(())
}

pub fn apply_compression(image: &Image, level: &CompressionLevel) -> Result<Image> {
    check_bitrate(level.bitrate)?;
    match &level.backend {
        CompressionBackend::Surrogate { quantization } => {
            quantization.validate()?;
            Ok(surrogate(image, quantization.step(level.bitrate)?))
        }
        CompressionBackend::External(codec) => external(image, level.bitrate, codec),
    }
}

/// Orthonormal 8-point DCT-II basis, `basis[u][x]`.
fn dct_basis() -> &'static [[f64; BLOCK]; BLOCK] {
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; BLOCK]; BLOCK];
        for (u, row) in b.iter_mut().enumerate() {
            let a = if u == 0 {
                (1.0 / BLOCK as f64).sqrt()
            } else {
                (2.0 / BLOCK as f64).sqrt()
            };
            for (x, v) in row.iter_mut().enumerate() {
                *v = a
                    * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / (2 * BLOCK) as f64)
                        .cos();
            }
        }
        b
    })
}

type Block = [[f64; BLOCK]; BLOCK];

fn forward(block: &Block) -> Block {
    let c = dct_basis();
    let mut tmp = [[0.0; BLOCK]; BLOCK];
    // rows
    for y in 0..BLOCK {
        for u in 0..BLOCK {
            tmp[y][u] = (0..BLOCK).map(|x| c[u][x] * block[y][x]).sum();
        }
    }
    let mut out = [[0.0; BLOCK]; BLOCK];
    for v in 0..BLOCK {
        for u in 0..BLOCK {
            out[v][u] = (0..BLOCK).map(|y| c[v][y] * tmp[y][u]).sum();
        }
    }
    out
}

fn inverse(coef: &Block) -> Block {
    let c = dct_basis();
    let mut tmp = [[0.0; BLOCK]; BLOCK];
    for y in 0..BLOCK {
        for u in 0..BLOCK {
            tmp[y][u] = (0..BLOCK).map(|v| c[v][y] * coef[v][u]).sum();
        }
    }
    let mut out = [[0.0; BLOCK]; BLOCK];
    for y in 0..BLOCK {
        for x in 0..BLOCK {
            out[y][x] = (0..BLOCK).map(|u| c[u][x] * tmp[y][u]).sum();
        }
    }
    out
}

/// 8x8 DCT-II, uniform quantization with step `q`, inverse transform.
/// Partial edge blocks are padded by replication and cropped afterwards.
fn surrogate(image: &Image, q: f64) -> Image {
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let mut out = vec![0.0; image.len()];
    for c in 0..ch {
        for by in (0..h).step_by(BLOCK) {
            for bx in (0..w).step_by(BLOCK) {
                let mut block = [[0.0; BLOCK]; BLOCK];
                for (j, row) in block.iter_mut().enumerate() {
                    for (i, v) in row.iter_mut().enumerate() {
                        let x = (bx + i).min(w - 1);
                        let y = (by + j).min(h - 1);
                        *v = image.get(x, y, c) * 255.0 - 128.0;
                    }
                }
                let mut coef = forward(&block);
                for v in coef.iter_mut().flatten() {
                    *v = (*v / q).round() * q;
                }
                let rec = inverse(&coef);
                for (j, row) in rec.iter().enumerate() {
                    for (i, v) in row.iter().enumerate() {
                        let (x, y) = (bx + i, by + j);
                        if x < w && y < h {
                            out[image.index(x, y, c)] = (v + 128.0) / 255.0;
                        }
                    }
                }
            }
        }
    }
    image.with_samples(out)
}

fn run_tool(program: &PathBuf, args: &[&str]) -> Result<()> {
    let output = Command::new(program)
        .args(args)
        .output()
        .map_err(|e| Error::Backend {
            message: format!("cannot launch {}: {e}", program.display()),
            stderr: String::new(),
        })?;
    if !output.status.success() {
        return Err(Error::Backend {
            message: format!("{} exited with {}", program.display(), output.status),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    Ok(())
}

fn external(image: &Image, bitrate: u8, codec: &ExternalCodec) -> Result<Image> {
    let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let input = dir.path().join("in.png");
    let stream = dir.path().join("stream.bin");
    let decoded = dir.path().join("out.png");
    save_image(image, &input)?;
    let rate = bitrate.to_string();
    run_tool(
        &codec.encoder,
        &[
            "-in",
            &input.to_string_lossy(),
            "-bitrate",
            &rate,
            "-out",
            &stream.to_string_lossy(),
        ],
    )?;
    run_tool(
        &codec.decoder,
        &[
            "-in",
            &stream.to_string_lossy(),
            "-out",
            &decoded.to_string_lossy(),
        ],
    )?;
    let out = load_image(&decoded)?;
    if !out.same_shape(image) {
        return Err(Error::Dimension(format!(
            "decoder returned {}x{}x{}, expected {}x{}x{}",
            out.width(),
            out.height(),
            out.channels(),
            image.width(),
            image.height(),
            image.channels()
        )));
    }
    Ok(out)
}
