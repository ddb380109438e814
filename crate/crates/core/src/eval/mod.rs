//! Answer judging and transcript metrics: hallucination rate, recovery rate
//! and temporal consistency.

mod constraints;
mod judge;
mod metrics;

pub use constraints::{
    evaluate_constraint, temporal_consistency, ConstraintKind, TemporalConstraint,
};
pub use judge::{judge, normalize, AliasTable};
pub use metrics::{hallucination_rate, recovery_rate, score, MetricReport};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub frame: usize,
    pub query: String,
    pub answer_key: String,
    /// Identity of the fact asked about; re-queries share it with the original.
    pub fact: String,
    pub model_answer: String,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction_of: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub turns: Vec<Turn>,
    #[serde(default)]
    pub lambda_trace: Vec<f64>,
}

impl Transcript {
    pub fn new(turns: Vec<Turn>) -> Result<Self> {
        let t = Transcript {
            turns,
            lambda_trace: Vec::new(),
        };
        t.validate()?;
        Ok(t)
    }

    /// Frames must be non-decreasing, error ids unique, and every correction
    /// must point at an error raised by an earlier turn.
    pub fn validate(&self) -> Result<()> {
        let mut raised = BTreeSet::new();
        let mut last_frame = 0;
        for (i, turn) in self.turns.iter().enumerate() {
            if turn.frame < last_frame {
                return Err(Error::Validation(format!(
                    "turn {i} goes back to frame {} after frame {last_frame}",
                    turn.frame
                )));
            }
            last_frame = turn.frame;
            if let Some(e) = turn.correction_of {
                if !raised.contains(&e) {
                    return Err(Error::Validation(format!(
                        "turn {i} corrects unknown error {e}"
                    )));
                }
            }
            if let Some(e) = turn.error_id {
                if !raised.insert(e) {
                    return Err(Error::Validation(format!("error id {e} raised twice")));
                }
            }
        }
        Ok(())
    }
}
