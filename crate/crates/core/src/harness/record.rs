//! JSON-lines run records: a config line, one line per (episode, frame), and a
//! closing summary line.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibrate::{replay_audit, AuditEntry, DegradationParams, PerformanceFeedback};
use crate::degrade::AppliedOp;
use crate::error::{Error, Result};
use crate::eval::{score, ConstraintKind, MetricReport, TemporalConstraint, Transcript, Turn};
use crate::tasks::Task;

use super::config::RunConfig;
use super::uir::UirSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnLine {
    pub episode: usize,
    pub t: usize,
    pub lambda: f64,
    pub params: DegradationParams,
    /// Judgment statistics that produced `lambda`; absent on the first frame.
    pub feedback: Option<PerformanceFeedback>,
    pub corrupted: bool,
    pub applied_ops: Vec<AppliedOp>,
    pub task: Option<Task>,
    pub requery: bool,
    pub answer: Option<String>,
    pub valid: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction_of: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metrics: MetricReport,
    pub lambda_trace: Vec<f64>,
    pub constraints: Vec<TemporalConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uir: Option<UirSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub turns: Vec<TurnLine>,
    pub summary: EpisodeSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub episodes: Vec<EpisodeRecord>,
    pub aggregate: MetricReport,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Config {
        schema_version: u32,
        config: RunConfig,
    },
    Turn(TurnLine),
    Summary {
        episodes: Vec<EpisodeSummary>,
        aggregate: MetricReport,
    },
}

/// Judged turns of an episode, in order.
pub fn transcript_of(turns: &[TurnLine]) -> Transcript {
    Transcript {
        turns: turns
            .iter()
            .filter_map(|l| {
                let task = l.task.as_ref()?;
                Some(Turn {
                    frame: l.t,
                    query: task.query.clone(),
                    answer_key: task.answer_key.clone(),
                    fact: task.fact_key(),
                    model_answer: l.answer.clone()?,
                    valid: l.valid?,
                    error_id: l.error_id,
                    correction_of: l.correction_of,
                })
            })
            .collect(),
        lambda_trace: turns.iter().map(|l| l.lambda).collect(),
    }
}

/// Consistency obligations implied by the annotations: for consecutive turns
/// on the same fact, an unchanged answer key requires unchanged answers, and a
/// changed key requires both answers to be correct in order.
pub fn derive_constraints(transcript: &Transcript) -> Vec<TemporalConstraint> {
    let mut last: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (j, turn) in transcript.turns.iter().enumerate() {
        if let Some(&i) = last.get(turn.fact.as_str()) {
            let prev = &transcript.turns[i];
            let kind = if prev.answer_key == turn.answer_key {
                ConstraintKind::UnchangedBetween {
                    fact: turn.fact.clone(),
                    start: prev.frame,
                    end: turn.frame,
                }
            } else {
                ConstraintKind::Before {
                    earlier: i,
                    later: j,
                }
            };
            out.push(TemporalConstraint::new(
                format!("phi_{}", out.len() + 1),
                kind,
            ));
        }
        last.insert(&turn.fact, j);
    }
    out
}

/// Audit trail of the calibrator as recorded in the turn lines.
pub fn audit_of(turns: &[TurnLine]) -> Vec<AuditEntry> {
    turns
        .iter()
        .map(|l| AuditEntry {
            t: l.t,
            feedback: l.feedback,
            lambda: l.lambda,
        })
        .collect()
}

fn json_line(line: &Line) -> Result<String> {
    let mut out = serde_json::to_string(line)?;
    out.push('\n');
    Ok(out)
}

pub(crate) fn config_line(config: &RunConfig) -> Result<String> {
    json_line(&Line::Config {
        schema_version: config.schema_version,
        config: config.clone(),
    })
}

pub(crate) fn episode_lines(episode: &EpisodeRecord) -> Result<String> {
    let mut out = String::new();
    for turn in &episode.turns {
        out.push_str(&json_line(&Line::Turn(turn.clone()))?);
    }
    Ok(out)
}

pub(crate) fn summary_line(episodes: &[EpisodeRecord], aggregate: &MetricReport) -> Result<String> {
    json_line(&Line::Summary {
        episodes: episodes.iter().map(|e| e.summary.clone()).collect(),
        aggregate: aggregate.clone(),
    })
}

impl RunRecord {
    pub fn render(&self) -> Result<String> {
        let mut out = config_line(&self.config)?;
        for ep in &self.episodes {
            out.push_str(&episode_lines(ep)?);
        }
        out.push_str(&summary_line(&self.episodes, &self.aggregate)?);
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.render()?).map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = None;
        let mut turns: BTreeMap<usize, Vec<TurnLine>> = BTreeMap::new();
        let mut summary = None;
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|e| Error::Parse {
                line: i as u64 + 1,
                message: e.to_string(),
            })?;
            match line {
                Line::Config { config: c, .. } if i == 0 => config = Some(c),
                Line::Config { .. } => {
                    return Err(Error::Record(format!(
                        "config line repeated at line {}",
                        i + 1
                    )))
                }
                Line::Turn(t) => turns.entry(t.episode).or_default().push(t),
                Line::Summary {
                    episodes,
                    aggregate,
                } => summary = Some((episodes, aggregate)),
            }
        }
        let config =
            config.ok_or_else(|| Error::Record("first line is not a config line".into()))?;
        let (summaries, aggregate) = summary
            .ok_or_else(|| Error::Record("record has no summary line (incomplete run?)".into()))?;
        let episodes = summaries
            .into_iter()
            .map(|s| EpisodeRecord {
                turns: turns.remove(&s.episode).unwrap_or_default(),
                summary: s,
            })
            .collect();
        Ok(RunRecord {
            config,
            episodes,
            aggregate,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordScore {
    pub episodes: Vec<MetricReport>,
    pub aggregate: MetricReport,
    /// Recomputed metrics equal the stored summary.
    pub matches_summary: bool,
    /// Every recorded severity follows from its recorded feedback.
    pub lambda_replays: bool,
}

/// Recomputes every metric from the turn lines alone.
pub fn score_record(record: &RunRecord) -> Result<RecordScore> {
    let aliases = &record.config.aliases;
    let mut episodes = Vec::with_capacity(record.episodes.len());
    let mut matches = true;
    let mut replays = true;
    for ep in &record.episodes {
        let transcript = transcript_of(&ep.turns);
        transcript.validate()?;
        let constraints = derive_constraints(&transcript);
        let metrics = score(&transcript, &constraints, aliases)?;
        matches &= metrics == ep.summary.metrics && constraints == ep.summary.constraints;
        let audit = audit_of(&ep.turns);
        replays &= replay_audit(&record.config.calibrator, &audit)
            && audit
                .iter()
                .map(|a| a.lambda)
                .eq(ep.summary.lambda_trace.iter().copied());
        episodes.push(metrics);
    }
    let aggregate = MetricReport::aggregate(&episodes);
    matches &= aggregate == record.aggregate;
    Ok(RecordScore {
        episodes,
        aggregate,
        matches_summary: matches,
        lambda_replays: replays,
    })
}
