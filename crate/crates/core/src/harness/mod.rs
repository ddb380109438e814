//! Episode orchestration: sequences, corruption, calibration, questioning,
//! judging and pseudo-labelling, with JSON-lines persistence.

mod client;
mod config;
mod episode;
mod generate;
mod mock;
mod model;
mod record;
mod scene;
mod uir;

pub use client::{http_request_count, query_model, request_body, HttpModel, ModelEndpoint};
pub use config::{ModelSpec, RunConfig, SequenceSource, TaskSettings, SCHEMA_VERSION};
pub use episode::{run_benchmark, run_benchmark_with, run_episode, run_to_file};
pub use generate::{annotate_run, generate_sequences, GeneratedEpisode, GeneratedFrame};
pub use mock::{wrong_answer, MockBehavior, MockModel, MockScript};
pub use model::{ContextTurn, FrameHints, ModelRequest, VisionModel};
pub use record::{
    audit_of, derive_constraints, score_record, transcript_of, EpisodeRecord, EpisodeSummary,
    RecordScore, RunRecord, TurnLine,
};
pub use scene::{generate_scene, SceneObject, SceneSpec};
pub use uir::{annotate_with_uir, UirItem, UirLabel, UirSummary};

use crate::error::Result;

/// Lines that differ between a stored record and a fresh run of its config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayDiff {
    pub differing_lines: Vec<usize>,
    pub stored_lines: usize,
    pub replayed_lines: usize,
}

impl ReplayDiff {
    pub fn is_identical(&self) -> bool {
        self.differing_lines.is_empty() && self.stored_lines == self.replayed_lines
    }
}

/// Re-executes the config snapshot of `stored` and compares line by line.
pub fn replay(stored: &str) -> Result<ReplayDiff> {
    let record = RunRecord::parse(stored)?;
    let fresh = run_benchmark(&record.config)?.render()?;
    let a: Vec<&str> = stored.lines().collect();
    let b: Vec<&str> = fresh.lines().collect();
    let differing_lines = (0..a.len().max(b.len()))
        .filter(|&i| a.get(i) != b.get(i))
        .map(|i| i + 1)
        .collect();
    Ok(ReplayDiff {
        differing_lines,
        stored_lines: a.len(),
        replayed_lines: b.len(),
    })
}
