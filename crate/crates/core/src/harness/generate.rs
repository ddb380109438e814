use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibrate::{step, CalibratorState, DegradationParams};
use crate::degrade::{corruption_mask, AppliedOp};
use crate::error::{Error, Result};
use crate::imaging::{save_image, Image};
use crate::seed::{derive_seed, purpose};
use crate::tasks::{generate_query, MemoryBuffer, Task};

use super::config::RunConfig;
use super::episode::{episode_inputs, frame_at};
use super::model::build_perturbable;
use super::uir::{annotate_with_uir, UirItem, UirSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFrame {
    pub t: usize,
    pub file: String,
    pub corrupted: bool,
    pub lambda: f64,
    pub params: DegradationParams,
    pub applied_ops: Vec<AppliedOp>,
    pub task: Option<Task>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedEpisode {
    pub episode: usize,
    pub frames: Vec<GeneratedFrame>,
}

/// Open-loop pass over one episode: without a model the severity stays at its
/// initial value (or the schedule's per-frame override).
fn open_loop(config: &RunConfig, episode: usize) -> Result<(Vec<Image>, GeneratedEpisode)> {
    let inputs = episode_inputs(config, episode)?;
    let mask = corruption_mask(&config.schedule);
    let mut state = CalibratorState::initial(&config.calibrator);
    let mut memory = MemoryBuffer::new(config.tasks.memory_window)?;
    let mut images = Vec::new();
    let mut frames = Vec::new();
    for t in 0..config.schedule.length {
        let (lambda, _) = step(&config.calibrator, &mut state, None);
        let (frame, params) = frame_at(config, episode, t, &inputs.images[t], &mask, lambda)?;
        let seed = derive_seed(
            config.master_seed,
            &[episode as u64, t as u64, purpose::TASK],
        );
        let task = generate_query(
            &mut memory,
            &inputs.annotations[t],
            seed,
            None,
            &config.tasks.generator,
        )?;
        frames.push(GeneratedFrame {
            t,
            file: format!("episode_{episode:03}/frame_{t:03}.png"),
            corrupted: frame.is_corrupted(),
            lambda: params.lambda,
            params,
            applied_ops: frame.applied_ops().to_vec(),
            task,
        });
        images.push(frame.image);
    }
    Ok((images, GeneratedEpisode { episode, frames }))
}

/// Writes corrupted frames as PNG files plus a `manifest.json` under `out_dir`.
pub fn generate_sequences(
    config: &RunConfig,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<GeneratedEpisode>> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    let mut episodes = Vec::with_capacity(config.episodes);
    for e in 0..config.episodes {
        let (images, generated) = open_loop(config, e)?;
        let dir = out_dir.join(format!("episode_{e:03}"));
        std::fs::create_dir_all(&dir).map_err(|err| Error::io(&dir, err))?;
        for (frame, image) in generated.frames.iter().zip(&images) {
            save_image(image, out_dir.join(&frame.file))?;
        }
        episodes.push(generated);
    }
    let manifest = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&episodes)?;
    std::fs::write(&manifest, text + "\n").map_err(|e| Error::io(&manifest, e))?;
    Ok(episodes)
}

/// Pseudo-labels every generated task of every episode.
pub fn annotate_run(config: &RunConfig) -> Result<Vec<UirSummary>> {
    config.validate()?;
    let ensemble = config
        .uir
        .as_ref()
        .ok_or_else(|| Error::Config("the config has no [uir] section".into()))?;
    (0..config.episodes)
        .map(|e| {
            let (images, generated) = open_loop(config, e)?;
            let items: Vec<UirItem<'_>> = generated
                .frames
                .iter()
                .zip(&images)
                .filter_map(|(f, image)| {
                    Some(UirItem {
                        frame: f.t,
                        image,
                        task: f.task.as_ref()?,
                    })
                })
                .collect();
            let base = derive_seed(config.master_seed, &[e as u64, purpose::ENSEMBLE]);
            let mut models = |task: &Task| build_perturbable(&config.model, task, base);
            annotate_with_uir(ensemble, &items, &mut models, base, &config.aliases)
        })
        .collect()
}
