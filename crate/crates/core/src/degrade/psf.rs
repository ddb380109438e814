use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::Kernel;

/// Camera pose samples over one exposure: `[tx, ty, tz, rx, ry, rz]`.
///
/// Translations are in pixel units at unit depth, rotations in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTrajectory {
    samples: Vec<[f64; 6]>,
}

impl MotionTrajectory {
    pub fn new(samples: Vec<[f64; 6]>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter(
                "trajectory needs at least one sample".into(),
            ));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "trajectory samples must be finite".into(),
            ));
        }
        Ok(MotionTrajectory { samples })
    }

    /// Pure image-plane translations, one `(dx, dy)` per sample.
    pub fn planar(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|&(x, y)| [x, y, 0.0, 0.0, 0.0, 0.0])
                .collect(),
        )
    }

    pub fn samples(&self) -> &[[f64; 6]] {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// Parses the plain trace format: six whitespace- or comma-separated
    /// numbers per line; blank lines and `#` comments are skipped.
    pub fn parse_trace(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>().map_err(|e| Error::Parse {
                        line: i as u64 + 1,
                        message: format!("`{s}`: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            let arr: [f64; 6] = vals.as_slice().try_into().map_err(|_| Error::Parse {
                line: i as u64 + 1,
                message: format!("expected 6 columns, found {}", vals.len()),
            })?;
            samples.push(arr);
        }
        Self::new(samples)
    }

    pub fn load_trace(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_trace(&text)
    }

    /// Synthetic hand-shake path: a straight sweep of length `extent` pixels in a
    /// random direction, with a small random-walk wobble.
    pub fn synthetic_shake(extent: f64, sample_count: usize, seed: u64) -> Result<Self> {
        if !(extent >= 0.0) || sample_count == 0 {
            return Err(Error::InvalidParameter(format!(
                "shake needs extent >= 0 and at least one sample (got {extent}, {sample_count})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let (s, c) = angle.sin_cos();
        let wobble = 0.08 * extent;
        let (mut jx, mut jy) = (0.0, 0.0);
        let n = sample_count.max(2) - 1;
        let samples = (0..sample_count)
            .map(|i| {
                let u = if sample_count == 1 {
                    0.0
                } else {
                    i as f64 / n as f64 - 0.5
                };
                jx += rng.random_range(-1.0..1.0) * wobble / sample_count as f64;
                jy += rng.random_range(-1.0..1.0) * wobble / sample_count as f64;
                [u * extent * c + jx, u * extent * s + jy, 0.0, 0.0, 0.0, 0.0]
            })
            .collect();
        Self::new(samples)
    }

    /// Area-uniform samples over a disk of the given radius (defocus aperture).
    pub fn disk(radius: f64, rings: usize) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter(format!("disk radius {radius} < 0")));
        }
        let mut samples = vec![[0.0; 6]];
        for ring in 1..=rings {
            let r = radius * ring as f64 / rings as f64;
            let count = 6 * ring;
            for k in 0..count {
                let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                samples.push([r * a.cos(), r * a.sin(), 0.0, 0.0, 0.0, 0.0]);
            }
        }
        Self::new(samples)
    }
}

/// First-order pinhole projection from pose to image-plane shift.
///
/// `dx = tx / depth + focal_px * ry`, `dy = ty / depth - focal_px * rx`.
/// Depth translation and roll only contribute second-order terms and are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub depth: f64,
    pub focal_px: f64,
}

impl Projection {
    pub const DEFAULT_FOCAL_PX: f64 = 500.0;

    pub fn new(depth: f64) -> Self {
        Projection {
            depth,
            focal_px: Self::DEFAULT_FOCAL_PX,
        }
    }

    pub fn project(&self, pose: &[f64; 6]) -> (f64, f64) {
        let [tx, ty, _tz, rx, ry, _rz] = *pose;
        (
            tx / self.depth + self.focal_px * ry,
            ty / self.depth - self.focal_px * rx,
        )
    }
}

/// Motion PSF: odd-sided, non-negative, unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfKernel {
    kernel: Kernel,
}

impl PsfKernel {
    pub fn side(&self) -> usize {
        self.kernel.width()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.kernel.weight(x, y)
    }

    pub fn delta() -> Self {
        PsfKernel {
            kernel: Kernel::identity(),
        }
    }

    /// Wraps an existing kernel, normalizing it to unit sum.
    pub fn from_kernel(kernel: Kernel) -> Result<Self> {
        if kernel.width() != kernel.height() {
            return Err(Error::Dimension("PSF must be square".into()));
        }
        let s = kernel.sum();
        if s <= 0.0 {
            return Err(Error::InvalidParameter("PSF has no energy".into()));
        }
        let side = kernel.width();
        let weights = kernel.weights().iter().map(|w| w / s).collect();
        Ok(PsfKernel {
            kernel: Kernel::new(side, side, weights)?,
        })
    }
}

pub fn render_psf(trajectory: &MotionTrajectory, side: usize, depth: f64) -> Result<PsfKernel> {
    render_psf_with(trajectory, side, &Projection::new(depth))
}

/// Projects every pose sample, splats it bilinearly around the kernel centre
/// and normalizes the result. Samples landing off-grid lose their weight.
pub fn render_psf_with(
    trajectory: &MotionTrajectory,
    side: usize,
    projection: &Projection,
) -> Result<PsfKernel> {
    if side == 0 || side % 2 == 0 {
        return Err(Error::Dimension(format!(
            "PSF side must be odd, got {side}"
        )));
    }
    if !(projection.depth > 0.0) || !projection.focal_px.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "projection depth must be > 0, got {}",
            projection.depth
        )));
    }
    let centre = (side / 2) as f64;
    let mut grid = vec![0.0; side * side];
    let per_sample = 1.0 / trajectory.sample_count() as f64;

    for pose in trajectory.samples() {
        let (dx, dy) = projection.project(pose);
        let (px, py) = (centre + dx, centre + dy);
        let (x0, y0) = (px.floor(), py.floor());
        let (fx, fy) = (px - x0, py - y0);
        for (ox, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
            for (oy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
                let (gx, gy) = (x0 + ox, y0 + oy);
                let w = wx * wy * per_sample;
                if w > 0.0 && gx >= 0.0 && gy >= 0.0 && gx < side as f64 && gy < side as f64 {
                    grid[gy as usize * side + gx as usize] += w;
                }
            }
        }
    }

    let total: f64 = grid.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "every trajectory sample projects outside the {side}x{side} grid"
        )));
    }
    for w in &mut grid {
        *w /= total;
    }
    Ok(PsfKernel {
        kernel: Kernel::new(side, side, grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Tent-function formulation of bilinear splatting, independent of the
    /// floor/fraction arithmetic in `render_psf_with`.
    fn splat_oracle(points: &[(f64, f64)], side: usize) -> Vec<f64> {
        let c = (side / 2) as f64;
        let mut grid = vec![0.0; side * side];
        for y in 0..side {
            for x in 0..side {
                for &(dx, dy) in points {
                    let tx = (1.0 - (c + dx - x as f64).abs()).max(0.0);
                    let ty = (1.0 - (c + dy - y as f64).abs()).max(0.0);
                    grid[y * side + x] += tx * ty;
                }
            }
        }
        let s: f64 = grid.iter().sum();
        grid.iter().map(|g| g / s).collect()
    }

    #[test]
    fn zero_motion_is_delta() {
        let t = MotionTrajectory::planar(&[(0.0, 0.0)]).unwrap();
        let k = render_psf(&t, 5, 1.0).unwrap();
        assert_eq!(k.weight(2, 2), 1.0);
        assert_eq!(k.kernel().sum(), 1.0);
    }

    #[test]
    fn one_pixel_horizontal_pair() {
        let t = MotionTrajectory::planar(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        let k = render_psf(&t, 5, 1.0).unwrap();
        assert_eq!(k.weight(2, 2), 0.5);
        assert_eq!(k.weight(3, 2), 0.5);
        let others: f64 = k.kernel().weights().iter().sum::<f64>() - 1.0;
        assert!(others.abs() < 1e-15);
    }

    #[test]
    fn ten_sample_ramp_matches_oracle() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| (-1.5 + 3.0 * i as f64 / 9.0, 0.0))
            .collect();
        let t = MotionTrajectory::planar(&pts).unwrap();
        let k = render_psf(&t, 5, 1.0).unwrap();
        let expected = splat_oracle(&pts, 5);
        for (a, b) in k.kernel().weights().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // Frozen: the ramp is symmetric and lands on columns 0..=4 of row 2.
        let row: Vec<f64> = (0..5).map(|x| k.weight(x, 2)).collect();
        let frozen = [
            4.0 / 60.0,
            17.0 / 60.0,
            18.0 / 60.0,
            17.0 / 60.0,
            4.0 / 60.0,
        ];
        for (a, b) in row.iter().zip(frozen) {
            assert!((a - b).abs() < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn depth_scales_translation() {
        let t = MotionTrajectory::planar(&[(0.0, 0.0), (2.0, 0.0)]).unwrap();
        let k = render_psf(&t, 5, 2.0).unwrap();
        assert_eq!(k.weight(3, 2), 0.5);
    }

    #[test]
    fn yaw_shifts_horizontally() {
        let t =
            MotionTrajectory::new(vec![[0.0; 6], [0.0, 0.0, 0.0, 0.0, 1.0 / 500.0, 0.0]]).unwrap();
        let k = render_psf(&t, 3, 1.0).unwrap();
        assert!((k.weight(2, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn even_side_and_empty_projection_rejected() {
        let t = MotionTrajectory::planar(&[(0.0, 0.0)]).unwrap();
        assert!(matches!(render_psf(&t, 4, 1.0), Err(Error::Dimension(_))));
        let far = MotionTrajectory::planar(&[(10.0, 10.0)]).unwrap();
        assert!(render_psf(&far, 5, 1.0).is_err());
        assert!(render_psf(&t, 5, 0.0).is_err());
    }

    #[test]
    fn trace_format_parses() {
        let text = "# tx ty tz rx ry rz\n0 0 0 0 0 0\n1.0, 0.5, 0, 0, 0, 0\n\n";
        let t = MotionTrajectory::parse_trace(text).unwrap();
        assert_eq!(t.sample_count(), 2);
        assert_eq!(t.samples()[1][1], 0.5);
        let bad = MotionTrajectory::parse_trace("0 0 0\n");
        assert!(matches!(bad, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn disk_is_symmetric() {
        let t = MotionTrajectory::disk(2.0, 3).unwrap();
        let k = render_psf(&t, 5, 1.0).unwrap();
        assert!((k.weight(0, 2) - k.weight(4, 2)).abs() < 1e-12);
        assert!((k.weight(2, 0) - k.weight(2, 4)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn unit_sum_and_non_negative(
            poses in prop::collection::vec(
                (-3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0, -0.004f64..0.004, -0.004f64..0.004, -0.1f64..0.1),
                1..40),
            depth in 0.8f64..3.0,
        ) {
            let samples = poses.iter().map(|&(a, b, c, d, e, f)| [a, b, c, d, e, f]).collect();
            let t = MotionTrajectory::new(samples).unwrap();
            let k = render_psf(&t, 15, depth).unwrap();
            prop_assert!(k.kernel().weights().iter().all(|w| *w >= 0.0));
            prop_assert!((k.kernel().sum() - 1.0).abs() < 1e-9);
        }
    }
}
