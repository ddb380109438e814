use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use crate::calibrate::{map_to_params, step, CalibratorState, FeedbackWindow};
use crate::degrade::{corrupt_frame, corruption_mask};
use crate::error::{Error, Result};
use crate::eval::{judge, score, MetricReport};
use crate::imaging::{load_image, Frame, Image};
use crate::seed::{derive_seed, purpose};
use crate::tasks::{
    generate_query, ingest_annotations, FrameAnnotation, FrameBounds, MemoryBuffer, Task,
};

use super::config::{RunConfig, SequenceSource};
use super::model::{build_model, build_perturbable, ContextTurn, FrameHints, ModelRequest};
use super::record::{
    config_line, derive_constraints, episode_lines, summary_line, transcript_of, EpisodeRecord,
    EpisodeSummary, RunRecord, TurnLine,
};
use super::scene::generate_scene;
use super::uir::{annotate_with_uir, UirItem};

/// Clean frames and annotations of one episode.
pub(crate) struct EpisodeInputs {
    pub images: Vec<Image>,
    pub annotations: Vec<FrameAnnotation>,
}

fn load_files(image_dir: &Path, annotations: &Path, length: usize) -> Result<EpisodeInputs> {
    let mut paths: Vec<_> = std::fs::read_dir(image_dir)
        .map_err(|e| Error::io(image_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|x| x.to_str())
                .is_some_and(|x| matches!(x.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        })
        .collect();
    paths.sort();
    if paths.len() != length {
        return Err(Error::Config(format!(
            "{} holds {} frames but the schedule covers {length}",
            image_dir.display(),
            paths.len()
        )));
    }
    let images = paths.iter().map(load_image).collect::<Result<Vec<_>>>()?;
    if images.iter().any(|i| !i.same_shape(&images[0])) {
        return Err(Error::Config("frames differ in size".into()));
    }
    let bounds = FrameBounds {
        width: images[0].width(),
        height: images[0].height(),
    };
    let mut timeline = ingest_annotations(annotations, bounds)?;
    if timeline.len() > length {
        return Err(Error::Config(format!(
            "annotations reach frame {} but the sequence has {length} frames",
            timeline.len() - 1
        )));
    }
    while timeline.len() < length {
        timeline.push(FrameAnnotation::empty(timeline.len()));
    }
    Ok(EpisodeInputs {
        images,
        annotations: timeline,
    })
}

pub(crate) fn episode_inputs(config: &RunConfig, episode: usize) -> Result<EpisodeInputs> {
    let length = config.schedule.length;
    match &config.sequence {
        SequenceSource::Files {
            image_dir,
            annotations,
        } => load_files(image_dir, annotations, length),
        SequenceSource::Synthetic(spec) => {
            let seed = derive_seed(config.master_seed, &[episode as u64, 0, purpose::SCENE]);
            let (images, annotations) = generate_scene(spec, length, seed)?;
            Ok(EpisodeInputs {
                images,
                annotations,
            })
        }
    }
}

/// Degrades frame `t` according to the schedule mask.
pub(crate) fn frame_at(
    config: &RunConfig,
    episode: usize,
    t: usize,
    clean: &Image,
    mask: &[bool],
    lambda: f64,
) -> Result<(Frame, crate::calibrate::DegradationParams)> {
    let lambda = config
        .schedule
        .per_frame_lambda
        .as_ref()
        .map_or(lambda, |l| l[t]);
    let params = map_to_params(&config.calibrator, lambda);
    let frame = if mask[t] {
        corrupt_frame(
            t,
            clean,
            &params.severity(&config.calibrator),
            &config.schedule.effective_tags(),
            &config.codec,
            derive_seed(
                config.master_seed,
                &[episode as u64, t as u64, purpose::DEGRADE],
            ),
        )?
    } else {
        Frame::clean(t, clean.clone())
    };
    Ok((frame, params))
}

/// Latest original turn answered wrongly whose fact has not been answered
/// correctly since.
fn requery_target(turns: &[TurnLine]) -> Option<usize> {
    let fact = |l: &TurnLine| l.task.as_ref().map(Task::fact_key);
    turns.iter().enumerate().rev().find_map(|(i, l)| {
        if l.requery || l.valid != Some(false) {
            return None;
        }
        let key = fact(l);
        let fixed = turns[i + 1..]
            .iter()
            .any(|later| later.valid == Some(true) && fact(later) == key);
        (!fixed).then_some(i)
    })
}

fn focus_set(turns: &[TurnLine], lookback: usize) -> Option<BTreeSet<String>> {
    let focus: BTreeSet<String> = turns
        .iter()
        .rev()
        .filter(|l| l.task.is_some())
        .take(lookback)
        .filter(|l| l.valid == Some(false))
        .flat_map(|l| l.task.as_ref().map(Task::aspects).unwrap_or_default())
        .collect();
    (!focus.is_empty()).then_some(focus)
}

/// Runs one closed-loop episode. Model failures end the episode early with
/// `complete: false`; configuration problems are returned as errors.
pub fn run_episode(config: &RunConfig, episode: usize) -> Result<EpisodeRecord> {
    config.validate()?;
    let inputs = episode_inputs(config, episode)?;
    let seed = |t: usize, p: u64| derive_seed(config.master_seed, &[episode as u64, t as u64, p]);
    let mask = corruption_mask(&config.schedule);
    let cal = &config.calibrator;
    let settings = &config.tasks;
    let mut state = CalibratorState::initial(cal);
    let mut window = FeedbackWindow::new(cal.window);
    let mut memory = MemoryBuffer::new(settings.memory_window)?;
    let mut model = build_model(&config.model)?;
    let mut pending = None;
    let mut turns: Vec<TurnLine> = Vec::with_capacity(mask.len());
    let mut context: Vec<ContextTurn> = Vec::new();
    let mut uir_images: Vec<(usize, Image)> = Vec::new();
    let mut failure = None;

    for t in 0..config.schedule.length {
        let feedback = pending.take();
        let (lambda, _) = step(cal, &mut state, feedback);
        let (frame, params) = frame_at(config, episode, t, &inputs.images[t], &mask, lambda)?;
        let annotation = &inputs.annotations[t];

        let target = settings
            .requery_frames
            .contains(&t)
            .then(|| requery_target(&turns))
            .flatten();
        let task = match target {
            Some(i) => {
                let task = turns[i].task.clone();
                memory.push(annotation.clone(), task.clone())?;
                task
            }
            None => {
                let focus = focus_set(&turns, settings.focus_lookback);
                generate_query(
                    &mut memory,
                    annotation,
                    seed(t, purpose::TASK),
                    focus.as_ref(),
                    &settings.generator,
                )?
            }
        };
        let mut line = TurnLine {
            episode,
            t,
            lambda,
            params,
            feedback,
            corrupted: frame.is_corrupted(),
            applied_ops: frame.applied_ops().to_vec(),
            task: task.clone(),
            requery: target.is_some(),
            answer: None,
            valid: None,
            error_id: None,
            correction_of: None,
        };
        let Some(task) = task else {
            turns.push(line);
            continue;
        };

        let from = settings
            .context_turns
            .map_or(0, |n| context.len().saturating_sub(n));
        let request = ModelRequest {
            image: &frame.image,
            query: &task.query,
            context: &context[from..],
            seed: seed(t, purpose::MODEL),
        };
        let hints = FrameHints {
            corrupted: frame.is_corrupted(),
            requery: target.is_some(),
            answer_key: &task.answer_key,
        };
        let answer = match model.answer(&request, &hints) {
            Ok(a) => a,
            Err(e) => {
                log::error!("episode {episode} aborted at frame {t}: {e}");
                failure = Some(format!("frame {t}: {e}"));
                turns.push(line);
                break;
            }
        };
        let valid = judge(&answer, &task.answer_key, &config.aliases);
        if let Some(i) = target {
            let original_t = turns[i].t as u64;
            let id = *turns[i].error_id.get_or_insert(original_t);
            line.correction_of = Some(id);
        } else if config.uir.is_some() {
            uir_images.push((t, frame.image.clone()));
        }
        context.push(ContextTurn {
            query: task.query.clone(),
            answer: answer.clone(),
        });
        line.answer = Some(answer);
        line.valid = Some(valid);
        pending = Some(window.push(valid));
        turns.push(line);
    }

    let transcript = transcript_of(&turns);
    let constraints = derive_constraints(&transcript);
    let metrics = score(&transcript, &constraints, &config.aliases)?;
    let uir = match (&config.uir, &failure) {
        (Some(ensemble), None) => {
            let items: Vec<UirItem<'_>> = uir_images
                .iter()
                .map(|(t, image)| UirItem {
                    frame: *t,
                    image,
                    task: turns[*t].task.as_ref().expect("judged turns carry tasks"),
                })
                .collect();
            let base = derive_seed(config.master_seed, &[episode as u64, purpose::ENSEMBLE]);
            let mut models = |task: &Task| build_perturbable(&config.model, task, base);
            Some(annotate_with_uir(
                ensemble,
                &items,
                &mut models,
                base,
                &config.aliases,
            )?)
        }
        _ => None,
    };
    Ok(EpisodeRecord {
        summary: EpisodeSummary {
            episode,
            complete: failure.is_none(),
            error: failure,
            metrics,
            lambda_trace: state.audit.iter().map(|a| a.lambda).collect(),
            constraints,
            uir,
        },
        turns,
    })
}

/// Runs every episode, `workers` at a time, and assembles the record in
/// episode order.
pub fn run_benchmark(config: &RunConfig) -> Result<RunRecord> {
    run_benchmark_with(config, |_| Ok(()))
}

/// Like [`run_benchmark`], handing each episode to `on_episode` as soon as
/// all earlier episodes have been handed over.
pub fn run_benchmark_with(
    config: &RunConfig,
    mut on_episode: impl FnMut(&EpisodeRecord) -> Result<()>,
) -> Result<RunRecord> {
    config.validate()?;
    let n = config.episodes;
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();
    let mut episodes = Vec::with_capacity(n);
    let outcome = std::thread::scope(|s| {
        for _ in 0..config.workers.min(n) {
            let tx = tx.clone();
            let (next, stop) = (&next, &stop);
            s.spawn(move || loop {
                let e = next.fetch_add(1, Ordering::SeqCst);
                if e >= n || stop.load(Ordering::SeqCst) {
                    break;
                }
                if tx.send((e, run_episode(config, e))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        for (e, result) in rx {
            pending.insert(e, result);
            while let Some(result) = pending.remove(&episodes.len()) {
                match result.and_then(|ep| on_episode(&ep).map(|()| ep)) {
                    Ok(ep) => episodes.push(ep),
                    Err(err) => {
                        stop.store(true, Ordering::SeqCst);
                        return Err(err);
                    }
                }
            }
        }
        Ok(())
    });
    outcome?;
    let aggregate = MetricReport::aggregate(episodes.iter().map(|e| &e.summary.metrics));
    Ok(RunRecord {
        config: config.clone(),
        episodes,
        aggregate,
    })
}

/// Runs the benchmark and appends to `path` as it goes: the config line
/// first, each episode's turns once they are final, the summary last.
pub fn run_to_file(config: &RunConfig, path: impl AsRef<Path>) -> Result<RunRecord> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::LineWriter::new(file);
    let mut put = |text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|e| Error::io(path, e))
    };
    put(&config_line(config)?)?;
    let record = run_benchmark_with(config, |ep| put(&episode_lines(ep)?))?;
    put(&summary_line(&record.episodes, &record.aggregate)?)?;
    Ok(record)
}
