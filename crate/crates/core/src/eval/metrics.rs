use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::constraints::{evaluate_all, TemporalConstraint};
use super::{AliasTable, Transcript};

/// `100 - 100 * valid / total`, or `None` for an empty transcript.
pub fn hallucination_rate(transcript: &Transcript) -> Option<f64> {
    let n = transcript.turns.len();
    if n == 0 {
        return None;
    }
    let valid = transcript.turns.iter().filter(|t| t.valid).count();
    Some(100.0 - 100.0 * (valid as f64 / n as f64))
}

/// Counts errors and how many of them were finally answered correctly.
fn recovery_counts(transcript: &Transcript) -> (usize, usize) {
    let turns = &transcript.turns;
    let mut errors = 0;
    let mut corrected = 0;
    for (i, turn) in turns.iter().enumerate() {
        let Some(id) = turn.error_id else { continue };
        errors += 1;
        let last = turns
            .iter()
            .rposition(|t| t.correction_of == Some(id))
            .or_else(|| {
                turns
                    .iter()
                    .rposition(|t| t.fact == turn.fact)
                    .filter(|&j| j > i)
            })
            .unwrap_or(i);
        if turns[last].valid {
            corrected += 1;
        }
    }
    (errors, corrected)
}

/// Percentage of flagged errors whose final answer is correct. The final
/// answer is the last turn correcting the error, else the last later turn on
/// the same fact, else the erroneous turn itself. `None` without errors.
pub fn recovery_rate(transcript: &Transcript) -> Option<f64> {
    let (errors, corrected) = recovery_counts(transcript);
    (errors > 0).then(|| 100.0 * corrected as f64 / errors as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub turns: usize,
    pub valid: usize,
    pub hallucination_rate: Option<f64>,
    pub errors: usize,
    pub corrected: usize,
    pub recovery_rate: Option<f64>,
    pub constraints: usize,
    pub satisfied: usize,
    pub temporal_consistency: Option<f64>,
}

/// Computes all three metrics for one transcript.
pub fn score(
    transcript: &Transcript,
    constraints: &[TemporalConstraint],
    aliases: &AliasTable,
) -> Result<MetricReport> {
    let (errors, corrected) = recovery_counts(transcript);
    let outcomes = evaluate_all(transcript, constraints, aliases)?;
    let satisfied = outcomes.iter().filter(|ok| **ok).count();
    Ok(MetricReport {
        turns: transcript.turns.len(),
        valid: transcript.turns.iter().filter(|t| t.valid).count(),
        hallucination_rate: hallucination_rate(transcript),
        errors,
        corrected,
        recovery_rate: recovery_rate(transcript),
        constraints: constraints.len(),
        satisfied,
        temporal_consistency: (!constraints.is_empty())
            .then(|| 100.0 * satisfied as f64 / constraints.len() as f64),
    })
}

impl MetricReport {
    /// Pools counts across episodes and recomputes the rates.
    pub fn aggregate<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> MetricReport {
        let mut total = MetricReport {
            turns: 0,
            valid: 0,
            hallucination_rate: None,
            errors: 0,
            corrected: 0,
            recovery_rate: None,
            constraints: 0,
            satisfied: 0,
            temporal_consistency: None,
        };
        for r in reports {
            total.turns += r.turns;
            total.valid += r.valid;
            total.errors += r.errors;
            total.corrected += r.corrected;
            total.constraints += r.constraints;
            total.satisfied += r.satisfied;
        }
        let pct = |num: usize, den: usize| (den > 0).then(|| 100.0 * num as f64 / den as f64);
        total.hallucination_rate =
            (total.turns > 0).then(|| 100.0 - 100.0 * (total.valid as f64 / total.turns as f64));
        total.recovery_rate = pct(total.corrected, total.errors);
        total.temporal_consistency = pct(total.satisfied, total.constraints);
        total
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "turns={}", self.turns)?;
        writeln!(f, "valid={}", self.valid)?;
        writeln!(f, "hallucination_rate={}", opt(self.hallucination_rate))?;
        writeln!(f, "errors={}", self.errors)?;
        writeln!(f, "corrected={}", self.corrected)?;
        writeln!(f, "recovery_rate={}", opt(self.recovery_rate))?;
        writeln!(f, "constraints={}", self.constraints)?;
        writeln!(f, "satisfied={}", self.satisfied)?;
        writeln!(f, "temporal_consistency={}", opt(self.temporal_consistency))
    }
}
