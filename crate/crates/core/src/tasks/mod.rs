//! Degradation-sensitive multi-turn query generation from object annotations.

mod annotations;
mod generator;
mod measures;
mod memory;

pub use annotations::{ingest_annotations, parse_annotations, FrameBounds};
pub use generator::{candidate_tasks, generate_query, GeneratorSettings};
pub use measures::{appearance_drift, delta_bbox, semantic_entropy};
pub use memory::{MemoryBuffer, DEFAULT_WINDOW};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: String,
    pub bbox: BBox,
    pub label: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default)]
    pub appearance: Vec<f64>,
}

impl ObjectState {
    /// Canonical entity phrase: `"<color> <label>"` when a color is annotated.
    pub fn describe(&self) -> String {
        match self.attributes.get("color") {
            Some(c) => canonicalize(&format!("{c} {}", self.label)),
            None => canonicalize(&self.label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    pub t: usize,
    pub objects: Vec<ObjectState>,
}

impl FrameAnnotation {
    pub fn empty(t: usize) -> Self {
        FrameAnnotation {
            t,
            objects: Vec::new(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&ObjectState> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.objects.iter().any(|o| o.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Presence,
    AttributeChange,
    Disappearance,
    SpatialChange,
    Reidentification,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Presence => "presence",
            TaskKind::AttributeChange => "attribute_change",
            TaskKind::Disappearance => "disappearance",
            TaskKind::SpatialChange => "spatial_change",
            TaskKind::Reidentification => "reidentification",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a task is about, enough to re-derive its answer from annotations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSubject {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_frame: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub t: usize,
    pub kind: TaskKind,
    pub query: String,
    pub answer_key: String,
    pub entropy: f64,
    pub subject: TaskSubject,
}

impl Task {
    /// Identity of the fact being asked. Presence questions refer to "the current
    /// frame" and share one fact per label; every other kind is pinned to its frame.
    pub fn fact_key(&self) -> String {
        let s = &self.subject;
        match self.kind {
            TaskKind::Presence => format!("presence:{}", s.label.as_deref().unwrap_or("")),
            TaskKind::AttributeChange => format!(
                "attribute_change:{}:{}@{}",
                s.object.as_deref().unwrap_or(""),
                s.attribute.as_deref().unwrap_or(""),
                self.t
            ),
            TaskKind::Disappearance => format!(
                "disappearance:{}@{}",
                s.reference_frame.unwrap_or(0),
                self.t
            ),
            TaskKind::SpatialChange => format!(
                "spatial_change:{}@{}",
                s.object.as_deref().unwrap_or(""),
                self.t
            ),
            TaskKind::Reidentification => format!(
                "reidentification:{}:{}@{}",
                s.object.as_deref().unwrap_or(""),
                s.other.as_deref().unwrap_or(""),
                self.t
            ),
        }
    }

    /// The aspect a task probes, used to match uncertainty focus sets.
    pub fn aspects(&self) -> Vec<String> {
        match self.kind {
            TaskKind::Presence | TaskKind::Disappearance => vec!["class".into()],
            TaskKind::AttributeChange => self.subject.attribute.iter().cloned().collect(),
            TaskKind::SpatialChange => vec!["motion".into()],
            TaskKind::Reidentification => vec!["identity".into(), "class".into()],
        }
    }
}

/// Lowercase, whitespace-collapsed form used for answer keys.
pub fn canonicalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
