use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub tau: f64,
    /// F1 of flagging hallucinations as `js >= tau`.
    pub f1: f64,
}

/// Candidate thresholds from 0.005 to 0.69 nats in steps of 0.005.
pub fn default_tau_grid() -> Vec<f64> {
    (1..=138).map(|i| i as f64 * 0.005).collect()
}

/// Picks the threshold maximizing the F1 score of hallucination rejection on
/// labelled `(js, hallucinated)` samples. The first maximum in grid order wins.
pub fn tune_threshold(samples: &[(f64, bool)], grid: &[f64]) -> Result<ThresholdChoice> {
    if samples.is_empty() || grid.is_empty() {
        return Err(Error::InvalidParameter(
            "threshold tuning needs samples and a non-empty grid".into(),
        ));
    }
    let mut best: Option<ThresholdChoice> = None;
    for &tau in grid {
        let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
        for &(js, bad) in samples {
            match (js >= tau, bad) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fne += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fne;
        let f1 = if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        };
        if best.is_none_or(|b| f1 > b.f1) {
            best = Some(ThresholdChoice { tau, f1 });
        }
    }
    Ok(best.expect("grid is non-empty"))
}
