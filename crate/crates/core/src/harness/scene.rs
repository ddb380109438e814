//! Seeded synthetic scenes: coloured rectangles that move, change colour and
//! vanish, rendered to RGB frames with matching annotations.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::tasks::{BBox, FrameAnnotation, ObjectState};

const PALETTE: [(&str, [f64; 3]); 6] = [
    ("red", [0.85, 0.12, 0.10]),
    ("blue", [0.10, 0.20, 0.85]),
    ("green", [0.12, 0.70, 0.20]),
    ("yellow", [0.90, 0.85, 0.15]),
    ("white", [0.95, 0.95, 0.95]),
    ("black", [0.05, 0.05, 0.05]),
];

const LABELS: [&str; 6] = ["car", "truck", "person", "dog", "bike", "bus"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    pub color: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Objects placed explicitly; `random_objects` more are drawn from the seed.
    pub objects: Vec<SceneObject>,
    pub random_objects: usize,
    pub move_prob: f64,
    pub step_px: f64,
    pub recolor_prob: f64,
    pub vanish_prob: f64,
    pub appearance_dim: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 64,
            height: 48,
            objects: Vec::new(),
            random_objects: 2,
            move_prob: 0.5,
            step_px: 3.0,
            recolor_prob: 0.15,
            vanish_prob: 0.08,
            appearance_dim: 4,
        }
    }
}

impl SceneSpec {
    /// One object that never moves, changes or disappears.
    pub fn static_object(label: &str, color: &str) -> Self {
        SceneSpec {
            objects: vec![SceneObject {
                id: format!("{label}1"),
                label: label.into(),
                color: color.into(),
                x: 20.0,
                y: 16.0,
                w: 16.0,
                h: 10.0,
            }],
            random_objects: 0,
            move_prob: 0.0,
            recolor_prob: 0.0,
            vanish_prob: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::Config("scene must be at least 16x16 pixels".into()));
        }
        for p in [self.move_prob, self.recolor_prob, self.vanish_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(
                    "scene probabilities must lie in [0, 1]".into(),
                ));
            }
        }
        if !(self.step_px >= 0.0 && self.step_px.is_finite()) {
            return Err(Error::Config("step_px must be non-negative".into()));
        }
        for o in &self.objects {
            if color_rgb(&o.color).is_none() {
                return Err(Error::Config(format!("unknown colour `{}`", o.color)));
            }
            if !(o.w > 0.0 && o.h > 0.0)
                || o.x < 0.0
                || o.y < 0.0
                || o.x + o.w > self.width as f64
                || o.y + o.h > self.height as f64
            {
                return Err(Error::Config(format!(
                    "object `{}` does not fit the scene",
                    o.id
                )));
            }
        }
        Ok(())
    }
}

fn color_rgb(name: &str) -> Option<[f64; 3]> {
    PALETTE.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

fn appearance(obj: &SceneObject, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let rgb = color_rgb(&obj.color).unwrap_or([0.5; 3]);
    let label_code = LABELS
        .iter()
        .position(|l| *l == obj.label)
        .unwrap_or(LABELS.len()) as f64;
    (0..dim)
        .map(|i| {
            let base = match i {
                0..=2 => rgb[i],
                3 => label_code / LABELS.len() as f64,
                _ => 0.0,
            };
            base + rng.random_range(-0.02..0.02)
        })
        .collect()
}

/// Renders `length` frames and their annotations from `seed`.
pub fn generate_scene(
    spec: &SceneSpec,
    length: usize,
    seed: u64,
) -> Result<(Vec<Image>, Vec<FrameAnnotation>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wf, hf) = (spec.width as f64, spec.height as f64);
    let mut objects = spec.objects.clone();
    for i in 0..spec.random_objects {
        let label = LABELS[rng.random_range(0..LABELS.len())];
        let w = rng.random_range(8..=16) as f64;
        let h = rng.random_range(6..=12) as f64;
        objects.push(SceneObject {
            id: format!("{label}{}", spec.objects.len() + i + 1),
            label: label.into(),
            color: PALETTE[rng.random_range(0..PALETTE.len())].0.into(),
            x: rng.random_range(0.0..wf - w).round(),
            y: rng.random_range(0.0..hf - h).round(),
            w,
            h,
        });
    }

    let mut alive = vec![true; objects.len()];
    let mut frames = Vec::with_capacity(length);
    let mut images = Vec::with_capacity(length);
    for t in 0..length {
        if t > 0 {
            for (o, live) in objects.iter_mut().zip(alive.iter_mut()) {
                if !*live {
                    continue;
                }
                if rng.random::<f64>() < spec.vanish_prob {
                    *live = false;
                    continue;
                }
                if rng.random::<f64>() < spec.move_prob {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    if rng.random::<bool>() {
                        o.x = (o.x + sign * spec.step_px).clamp(0.0, wf - o.w);
                    } else {
                        o.y = (o.y + sign * spec.step_px).clamp(0.0, hf - o.h);
                    }
                }
                if rng.random::<f64>() < spec.recolor_prob {
                    let others: Vec<&str> = PALETTE
                        .iter()
                        .map(|p| p.0)
                        .filter(|c| *c != o.color)
                        .collect();
                    o.color = others[rng.random_range(0..others.len())].into();
                }
            }
        }
        let mut states = Vec::new();
        for (o, _) in objects.iter().zip(&alive).filter(|(_, live)| **live) {
            states.push(ObjectState {
                id: o.id.clone(),
                bbox: BBox::new(o.x, o.y, o.w, o.h),
                label: o.label.clone(),
                attributes: BTreeMap::from([("color".to_string(), o.color.clone())]),
                appearance: appearance(o, spec.appearance_dim, &mut rng),
            });
        }
        images.push(render(spec, &states)?);
        frames.push(FrameAnnotation { t, objects: states });
    }
    Ok((images, frames))
}

fn render(spec: &SceneSpec, objects: &[ObjectState]) -> Result<Image> {
    let (w, h) = (spec.width, spec.height);
    Image::from_fn(w, h, 3, |x, y, c| {
        let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
        let hit = objects.iter().rev().find(|o| {
            let b = o.bbox;
            xf >= b.x && xf < b.x + b.w && yf >= b.y && yf < b.y + b.h
        });
        match hit {
            Some(o) => color_rgb(&o.attributes["color"]).unwrap_or([0.5; 3])[c],
            None => 0.35 + 0.3 * (x as f64 / w as f64) + 0.1 * (y as f64 / h as f64),
        }
    })
}
