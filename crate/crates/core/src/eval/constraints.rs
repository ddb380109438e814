use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{AliasTable, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Turn `earlier` is judged valid, as is `later`, and it happens at a
    /// strictly earlier frame.
    Before { earlier: usize, later: usize },
    /// Mirror of `Before`: `event` is valid and strictly after valid `reference`.
    After { event: usize, reference: usize },
    /// Every answer about `fact` within the inclusive frame window agrees.
    UnchangedBetween {
        fact: String,
        start: usize,
        end: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalConstraint {
    pub id: String,
    #[serde(flatten)]
    pub kind: ConstraintKind,
}

impl TemporalConstraint {
    pub fn new(id: impl Into<String>, kind: ConstraintKind) -> Self {
        TemporalConstraint {
            id: id.into(),
            kind,
        }
    }

    fn resolves(&self, transcript: &Transcript) -> bool {
        let n = transcript.turns.len();
        match &self.kind {
            ConstraintKind::Before {
                earlier: a,
                later: b,
            }
            | ConstraintKind::After {
                event: a,
                reference: b,
            } => *a < n && *b < n,
            ConstraintKind::UnchangedBetween { fact, start, end } => {
                start <= end
                    && transcript
                        .turns
                        .iter()
                        .any(|t| &t.fact == fact && (*start..=*end).contains(&t.frame))
            }
        }
    }
}

/// Evaluates one constraint, which must resolve against the transcript.
pub fn evaluate_constraint(
    transcript: &Transcript,
    constraint: &TemporalConstraint,
    aliases: &AliasTable,
) -> Result<bool> {
    if !constraint.resolves(transcript) {
        return Err(Error::ConstraintResolution(vec![constraint.id.clone()]));
    }
    let turns = &transcript.turns;
    Ok(match &constraint.kind {
        ConstraintKind::Before { earlier, later } => {
            let (a, b) = (&turns[*earlier], &turns[*later]);
            a.valid && b.valid && a.frame < b.frame
        }
        ConstraintKind::After { event, reference } => {
            let (a, b) = (&turns[*event], &turns[*reference]);
            a.valid && b.valid && a.frame > b.frame
        }
        ConstraintKind::UnchangedBetween { fact, start, end } => {
            let answers: BTreeSet<String> = turns
                .iter()
                .filter(|t| &t.fact == fact && (*start..=*end).contains(&t.frame))
                .map(|t| aliases.canonical(&t.model_answer))
                .collect();
            answers.len() == 1
        }
    })
}

pub(crate) fn evaluate_all(
    transcript: &Transcript,
    constraints: &[TemporalConstraint],
    aliases: &AliasTable,
) -> Result<Vec<bool>> {
    let unresolved: Vec<String> = constraints
        .iter()
        .filter(|c| !c.resolves(transcript))
        .map(|c| c.id.clone())
        .collect();
    if !unresolved.is_empty() {
        return Err(Error::ConstraintResolution(unresolved));
    }
    constraints
        .iter()
        .map(|c| evaluate_constraint(transcript, c, aliases))
        .collect()
}

/// Percentage of satisfied constraints; `None` when there are none.
pub fn temporal_consistency(
    transcript: &Transcript,
    constraints: &[TemporalConstraint],
    aliases: &AliasTable,
) -> Result<Option<f64>> {
    let outcomes = evaluate_all(transcript, constraints, aliases)?;
    if outcomes.is_empty() {
        return Ok(None);
    }
    let ok = outcomes.iter().filter(|o| **o).count();
    Ok(Some(100.0 * ok as f64 / outcomes.len() as f64))
}
