use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::taxonomy::DegradationType;

/// Temporal placement of corruption within an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// Frames `0..k` corrupted, the rest clean (tests recovery).
    Early { k: usize },
    /// Frames `0..k` clean, the rest corrupted.
    Late { k: usize },
    /// `duty` corrupted frames at the start of every `period`.
    Intermittent { period: usize, duty: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationSchedule {
    pub length: usize,
    #[serde(flatten)]
    pub regime: Regime,
    /// Optional per-frame severity overrides; bypasses the calibrator for degradation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_frame_lambda: Option<Vec<f64>>,
    /// Taxonomy entries applied to corrupted frames. Empty means the three primary operators.
    #[serde(default)]
    pub tags: Vec<DegradationType>,
}

impl DegradationSchedule {
    pub fn early(length: usize, k: usize) -> Result<Self> {
        Self::with_regime(length, Regime::Early { k })
    }

    pub fn late(length: usize, k: usize) -> Result<Self> {
        Self::with_regime(length, Regime::Late { k })
    }

    pub fn intermittent(length: usize, period: usize, duty: usize) -> Result<Self> {
        Self::with_regime(length, Regime::Intermittent { period, duty })
    }

    fn with_regime(length: usize, regime: Regime) -> Result<Self> {
        let s = DegradationSchedule {
            length,
            regime,
            per_frame_lambda: None,
            tags: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.length;
        if t == 0 {
            return Err(Error::Validation("schedule length must be >= 1".into()));
        }
        match self.regime {
            Regime::Early { k } | Regime::Late { k } => {
                if k == 0 || k >= t {
                    return Err(Error::Validation(format!(
                        "corruption boundary k={k} must satisfy 0 < k < T={t}"
                    )));
                }
            }
            Regime::Intermittent { period, duty } => {
                if period < 2 || duty == 0 || duty >= period {
                    return Err(Error::Validation(format!(
                        "intermittent schedule needs period >= 2 and 1 <= duty < period (got {period}, {duty})"
                    )));
                }
            }
        }
        if let Some(l) = &self.per_frame_lambda {
            if l.len() != t {
                return Err(Error::Validation(format!(
                    "per-frame lambda has {} entries for {t} frames",
                    l.len()
                )));
            }
            if l.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Validation(
                    "per-frame lambda must lie in [0,1]".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn effective_tags(&self) -> Vec<DegradationType> {
        if self.tags.is_empty() {
            DegradationType::PRIMARY.to_vec()
        } else {
            self.tags.clone()
        }
    }
}

/// Per-frame corruption flags for a schedule.
pub fn corruption_mask(schedule: &DegradationSchedule) -> Vec<bool> {
    let t = schedule.length;
    match schedule.regime {
        Regime::Early { k } => (0..t).map(|i| i < k).collect(),
        Regime::Late { k } => (0..t).map(|i| i >= k).collect(),
        Regime::Intermittent { period, duty } => (0..t).map(|i| i % period < duty).collect(),
    }
}
