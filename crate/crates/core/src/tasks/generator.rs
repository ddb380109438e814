use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::measures::{l2_distance, semantic_entropy};
use super::{
    canonicalize, FrameAnnotation, MemoryBuffer, ObjectState, Task, TaskKind, TaskSubject,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSettings {
    /// Softmax temperature over candidate scores.
    pub temperature: f64,
    /// Score bonus for candidates probing an aspect in the uncertainty focus.
    pub focus_boost: f64,
    /// Minimum displacement in pixels for a spatial-change question.
    pub motion_threshold: f64,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        GeneratorSettings {
            temperature: 1.0,
            focus_boost: 1.0,
            motion_threshold: 1.0,
        }
    }
}

impl GeneratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter(
                "temperature must be positive".into(),
            ));
        }
        if !(self.focus_boost >= 0.0 && self.focus_boost.is_finite()) {
            return Err(Error::InvalidParameter(
                "focus boost must be non-negative".into(),
            ));
        }
        if !(self.motion_threshold > 0.0 && self.motion_threshold.is_finite()) {
            return Err(Error::InvalidParameter(
                "motion threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

const PRESENCE: &[&str] = &[
    "Is there a {label} in the current frame?",
    "Can you see a {label} in this frame?",
    "Does this frame contain a {label}?",
];
const ATTRIBUTE_CHANGE: &[&str] = &[
    "Has the {attr} of the {label} changed since the previous frame?",
    "Did the {label} change its {attr} compared with the last frame?",
    "Is the {attr} of the {label} different from the previous frame?",
];
const DISAPPEARANCE: &[&str] = &[
    "What object was present in frame {ref} but disappeared in frame {t}?",
    "Which object seen in frame {ref} is no longer visible in frame {t}?",
];
const SPATIAL_CHANGE: &[&str] = &[
    "In which direction did the {desc} move since the previous frame?",
    "Which way has the {desc} moved compared with the last frame?",
];
const REIDENTIFICATION: &[&str] = &[
    "Is the {desc} in the current frame the same one seen in frame {ref}?",
    "Is this {desc} the same object that appeared in frame {ref}?",
];

fn phrasings(kind: TaskKind) -> &'static [&'static str] {
    match kind {
        TaskKind::Presence => PRESENCE,
        TaskKind::AttributeChange => ATTRIBUTE_CHANGE,
        TaskKind::Disappearance => DISAPPEARANCE,
        TaskKind::SpatialChange => SPATIAL_CHANGE,
        TaskKind::Reidentification => REIDENTIFICATION,
    }
}

fn render(template: &str, vars: &[(&str, String)]) -> String {
    vars.iter().fold(template.to_string(), |s, (k, v)| {
        s.replace(&format!("{{{k}}}"), v)
    })
}

struct Candidate {
    task: Task,
    vars: Vec<(&'static str, String)>,
}

fn candidate(
    t: usize,
    kind: TaskKind,
    answer_key: String,
    entropy: f64,
    subject: TaskSubject,
    vars: Vec<(&'static str, String)>,
) -> Candidate {
    let query = render(phrasings(kind)[0], &vars);
    Candidate {
        task: Task {
            t,
            kind,
            query,
            answer_key,
            entropy,
            subject,
        },
        vars,
    }
}

/// Horizontal or vertical direction of the dominant displacement component,
/// with image y growing downwards. `None` below the threshold.
pub(crate) fn direction(dx: f64, dy: f64, threshold: f64) -> Option<&'static str> {
    if dx.abs().max(dy.abs()) < threshold {
        return None;
    }
    Some(if dx.abs() >= dy.abs() {
        if dx > 0.0 {
            "right"
        } else {
            "left"
        }
    } else if dy > 0.0 {
        "down"
    } else {
        "up"
    })
}

/// Every applicable task for `frame` given the remembered window, in a fixed
/// order, each carrying its answer key and entropy score.
pub fn candidate_tasks(
    memory: &MemoryBuffer,
    frame: &FrameAnnotation,
    settings: &GeneratorSettings,
) -> Result<Vec<Task>> {
    Ok(enumerate(memory, frame, settings)?
        .into_iter()
        .map(|c| c.task)
        .collect())
}

fn enumerate(
    memory: &MemoryBuffer,
    frame: &FrameAnnotation,
    settings: &GeneratorSettings,
) -> Result<Vec<Candidate>> {
    memory.check_before(frame.t)?;
    let t = frame.t;
    let history: Vec<&FrameAnnotation> = memory.frames().chain(std::iter::once(frame)).collect();
    let prev = memory.latest();
    let mut out = Vec::new();

    let labels: BTreeSet<&str> = history
        .iter()
        .flat_map(|f| f.objects.iter().map(|o| o.label.as_str()))
        .collect();
    for label in &labels {
        let present = history.iter().filter(|f| f.has_label(label)).count() as f64;
        let absent = history.len() as f64 - present;
        let entropy = semantic_entropy(&[("yes", present), ("no", absent)])?;
        let answer = if frame.has_label(label) { "yes" } else { "no" };
        out.push(candidate(
            t,
            TaskKind::Presence,
            answer.into(),
            entropy,
            TaskSubject {
                label: Some(label.to_string()),
                ..Default::default()
            },
            vec![("label", label.to_string())],
        ));
    }

    if let Some(prev) = prev {
        for cur in &frame.objects {
            let Some(old) = prev.get(&cur.id) else {
                continue;
            };
            for (attr, new_value) in &cur.attributes {
                let Some(old_value) = old.attributes.get(attr) else {
                    continue;
                };
                if old_value == new_value {
                    continue;
                }
                let values: Vec<(&str, f64)> = history
                    .iter()
                    .filter_map(|f| f.get(&cur.id)?.attributes.get(attr))
                    .map(|v| (v.as_str(), 1.0))
                    .collect();
                out.push(candidate(
                    t,
                    TaskKind::AttributeChange,
                    canonicalize(&format!("yes, {old_value} to {new_value}")),
                    semantic_entropy(&values)?,
                    TaskSubject {
                        object: Some(cur.id.clone()),
                        label: Some(cur.label.clone()),
                        attribute: Some(attr.clone()),
                        reference_frame: Some(prev.t),
                        ..Default::default()
                    },
                    vec![("attr", attr.clone()), ("label", cur.label.clone())],
                ));
            }
        }
    }

    if let Some(reference) = t.checked_sub(2).and_then(|r| memory.frame_at(r)) {
        let gone: BTreeSet<String> = reference
            .objects
            .iter()
            .filter(|o| frame.get(&o.id).is_none())
            .map(ObjectState::describe)
            .collect();
        if !gone.is_empty() {
            let seen: Vec<(String, f64)> = reference
                .objects
                .iter()
                .map(|o| (o.describe(), 1.0))
                .collect();
            out.push(candidate(
                t,
                TaskKind::Disappearance,
                gone.into_iter().collect::<Vec<_>>().join(", "),
                semantic_entropy(&seen)?,
                TaskSubject {
                    reference_frame: Some(reference.t),
                    ..Default::default()
                },
                vec![("ref", reference.t.to_string()), ("t", t.to_string())],
            ));
        }
    }

    if let Some(prev) = prev {
        for cur in &frame.objects {
            let Some(old) = prev.get(&cur.id) else {
                continue;
            };
            let Some(dir) = direction(
                cur.bbox.x - old.bbox.x,
                cur.bbox.y - old.bbox.y,
                settings.motion_threshold,
            ) else {
                continue;
            };
            let mut moves: Vec<(&str, f64)> = Vec::new();
            for pair in history.windows(2) {
                if let (Some(a), Some(b)) = (pair[0].get(&cur.id), pair[1].get(&cur.id)) {
                    let d = direction(
                        b.bbox.x - a.bbox.x,
                        b.bbox.y - a.bbox.y,
                        settings.motion_threshold,
                    );
                    moves.push((d.unwrap_or("none"), 1.0));
                }
            }
            out.push(candidate(
                t,
                TaskKind::SpatialChange,
                dir.into(),
                semantic_entropy(&moves)?,
                TaskSubject {
                    object: Some(cur.id.clone()),
                    label: Some(cur.label.clone()),
                    reference_frame: Some(prev.t),
                    ..Default::default()
                },
                vec![("desc", cur.describe())],
            ));
        }
    }

    // Last sighting in memory of every id, grouped by label.
    let mut last_seen: BTreeMap<&str, BTreeMap<&str, (usize, &ObjectState)>> = BTreeMap::new();
    for f in memory.frames() {
        for o in &f.objects {
            last_seen
                .entry(o.label.as_str())
                .or_default()
                .insert(o.id.as_str(), (f.t, o));
        }
    }
    for cur in &frame.objects {
        let Some(seen) = last_seen.get(cur.label.as_str()) else {
            continue;
        };
        let mut ids: BTreeSet<&str> = seen.keys().copied().collect();
        ids.insert(cur.id.as_str());
        if ids.len() < 2 {
            continue;
        }
        let mut weights = Vec::with_capacity(seen.len());
        for (id, (_, o)) in seen {
            let answer = if *id == cur.id { "yes" } else { "no" };
            weights.push((
                answer,
                (-l2_distance(&cur.appearance, &o.appearance)?).exp(),
            ));
        }
        let entropy = semantic_entropy(&weights)?;
        for (id, (s, _)) in seen {
            out.push(candidate(
                t,
                TaskKind::Reidentification,
                if *id == cur.id { "yes" } else { "no" }.into(),
                entropy,
                TaskSubject {
                    object: Some(cur.id.clone()),
                    other: Some(id.to_string()),
                    label: Some(cur.label.clone()),
                    reference_frame: Some(*s),
                    ..Default::default()
                },
                vec![("desc", cur.describe()), ("ref", s.to_string())],
            ));
        }
    }

    Ok(out)
}

/// Samples one task for `frame` by a seeded softmax over entropy scores, then
/// records the frame and the task in `memory`. Returns `Ok(None)` when no
/// template applies; the frame is still remembered.
pub fn generate_query(
    memory: &mut MemoryBuffer,
    frame: &FrameAnnotation,
    seed: u64,
    focus: Option<&BTreeSet<String>>,
    settings: &GeneratorSettings,
) -> Result<Option<Task>> {
    settings.validate()?;
    let candidates = enumerate(memory, frame, settings)?;
    let task = if candidates.is_empty() {
        None
    } else {
        let scores: Vec<f64> = candidates
            .iter()
            .map(|c| {
                let boosted = focus.is_some_and(|f| c.task.aspects().iter().any(|a| f.contains(a)));
                c.task.entropy + if boosted { settings.focus_boost } else { 0.0 }
            })
            .collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores
            .iter()
            .map(|s| ((s - top) / settings.temperature).exp())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
        let mut pick = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        let chosen = candidates.into_iter().nth(pick).expect("index in range");
        let table = phrasings(chosen.task.kind);
        let mut task = chosen.task;
        task.query = render(table[rng.random_range(0..table.len())], &chosen.vars);
        Some(task)
    };
    memory.push(frame.clone(), task.clone())?;
    log::debug!(
        "frame {}: {}",
        frame.t,
        task.as_ref().map_or("no task", |q| q.kind.as_str())
    );
    Ok(task)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::BBox;

    fn obj(id: &str, label: &str, x: f64, color: Option<&str>) -> ObjectState {
        ObjectState {
            id: id.into(),
            bbox: BBox::new(x, 5.0, 4.0, 4.0),
            label: label.into(),
            attributes: color
                .map(|c| [("color".to_string(), c.to_string())].into())
                .unwrap_or_default(),
            appearance: vec![0.0, 1.0],
        }
    }

    fn frame(t: usize, objects: Vec<ObjectState>) -> FrameAnnotation {
        FrameAnnotation { t, objects }
    }

    fn run(frames: &[FrameAnnotation], seed: u64) -> Vec<Option<Task>> {
        let mut m = MemoryBuffer::default();
        frames
            .iter()
            .map(|f| generate_query(&mut m, f, seed, None, &GeneratorSettings::default()).unwrap())
            .collect()
    }

    #[test]
    fn empty_scene_gives_no_task() {
        assert_eq!(
            run(&[frame(0, vec![]), frame(1, vec![])], 3),
            vec![None, None]
        );
    }

    #[test]
    fn static_object_forces_presence() {
        let frames: Vec<_> = (0..5)
            .map(|t| frame(t, vec![obj("a", "car", 10.0, Some("red"))]))
            .collect();
        for seed in 0..20 {
            for task in run(&frames, seed) {
                let task = task.unwrap();
                assert_eq!(task.kind, TaskKind::Presence);
                assert_eq!(task.answer_key, "yes");
                assert_eq!(task.entropy, 0.0);
            }
        }
    }

    #[test]
    fn color_flip_offers_attribute_change() {
        let mut m = MemoryBuffer::default();
        let s = GeneratorSettings::default();
        generate_query(
            &mut m,
            &frame(0, vec![obj("a", "car", 10.0, Some("red"))]),
            0,
            None,
            &s,
        )
        .unwrap();
        let cur = frame(1, vec![obj("a", "car", 10.0, Some("blue"))]);
        let tasks = candidate_tasks(&m, &cur, &s).unwrap();
        let change = tasks
            .iter()
            .find(|q| q.kind == TaskKind::AttributeChange)
            .unwrap();
        assert_eq!(change.answer_key, "yes, red to blue");
        assert!((change.entropy - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(change.query.contains("color"));
    }

    #[test]
    fn disappearance_names_the_object() {
        let mut m = MemoryBuffer::default();
        let s = GeneratorSettings::default();
        let f0 = frame(
            0,
            vec![
                obj("a", "car", 10.0, Some("red")),
                obj("b", "dog", 20.0, None),
            ],
        );
        let f1 = frame(1, vec![obj("b", "dog", 20.0, None)]);
        generate_query(&mut m, &f0, 0, None, &s).unwrap();
        generate_query(&mut m, &f1, 0, None, &s).unwrap();
        let f2 = frame(2, vec![obj("b", "dog", 20.0, None)]);
        let tasks = candidate_tasks(&m, &f2, &s).unwrap();
        let gone = tasks
            .iter()
            .find(|q| q.kind == TaskKind::Disappearance)
            .unwrap();
        assert_eq!(gone.answer_key, "red car");
        assert_eq!(
            gone.query,
            "What object was present in frame 0 but disappeared in frame 2?"
        );
    }

    #[test]
    fn spatial_change_direction() {
        assert_eq!(direction(3.0, 0.0, 1.0), Some("right"));
        assert_eq!(direction(-3.0, 1.0, 1.0), Some("left"));
        assert_eq!(direction(0.5, -2.0, 1.0), Some("up"));
        assert_eq!(direction(0.0, 2.0, 1.0), Some("down"));
        assert_eq!(direction(0.5, 0.5, 1.0), None);
        let mut m = MemoryBuffer::default();
        let s = GeneratorSettings::default();
        generate_query(
            &mut m,
            &frame(0, vec![obj("a", "car", 10.0, None)]),
            0,
            None,
            &s,
        )
        .unwrap();
        let tasks = candidate_tasks(&m, &frame(1, vec![obj("a", "car", 13.0, None)]), &s).unwrap();
        let mv = tasks
            .iter()
            .find(|q| q.kind == TaskKind::SpatialChange)
            .unwrap();
        assert_eq!(mv.answer_key, "right");
    }

    #[test]
    fn reidentification_needs_two_ids() {
        let mut m = MemoryBuffer::default();
        let s = GeneratorSettings::default();
        generate_query(
            &mut m,
            &frame(0, vec![obj("a", "car", 10.0, None)]),
            0,
            None,
            &s,
        )
        .unwrap();
        generate_query(
            &mut m,
            &frame(1, vec![obj("b", "car", 30.0, None)]),
            0,
            None,
            &s,
        )
        .unwrap();
        let tasks = candidate_tasks(&m, &frame(2, vec![obj("a", "car", 10.0, None)]), &s).unwrap();
        let reid: Vec<_> = tasks
            .iter()
            .filter(|q| q.kind == TaskKind::Reidentification)
            .collect();
        assert_eq!(reid.len(), 2);
        for q in reid {
            let same = q.subject.other.as_deref() == Some("a");
            assert_eq!(q.answer_key, if same { "yes" } else { "no" });
        }
    }

    #[test]
    fn deterministic_for_same_seed() {
        let frames: Vec<_> = (0..6)
            .map(|t| {
                let color = if t % 2 == 0 { "red" } else { "blue" };
                frame(
                    t,
                    vec![
                        obj("a", "car", 10.0 + 3.0 * t as f64, Some(color)),
                        obj("b", "dog", 40.0, None),
                    ],
                )
            })
            .collect();
        assert_eq!(run(&frames, 11), run(&frames, 11));
    }

    #[test]
    fn focus_shifts_selection() {
        let mut m = MemoryBuffer::default();
        let s = GeneratorSettings {
            focus_boost: 50.0,
            ..Default::default()
        };
        generate_query(
            &mut m,
            &frame(0, vec![obj("a", "car", 10.0, Some("red"))]),
            0,
            None,
            &s,
        )
        .unwrap();
        let cur = frame(1, vec![obj("a", "car", 10.0, Some("blue"))]);
        let focus: BTreeSet<String> = ["color".to_string()].into();
        for seed in 0..10 {
            let task = generate_query(&mut m.clone(), &cur, seed, Some(&focus), &s)
                .unwrap()
                .unwrap();
            assert_eq!(task.kind, TaskKind::AttributeChange);
        }
    }

    #[test]
    fn memory_frame_from_future_rejected() {
        let mut m = MemoryBuffer::default();
        m.push(frame(4, vec![]), None).unwrap();
        let r = generate_query(
            &mut m,
            &frame(3, vec![]),
            0,
            None,
            &GeneratorSettings::default(),
        );
        assert!(r.is_err());
    }
}
