//! Closed-loop difficulty control.
//!
//! Severity is a linear law of the previous window's accuracy (EPI) and
//! hallucination rate (HR), clamped to `[0, 1]`, then mapped to blur extent,
//! ISO gain and bitrate by monotone transfer functions.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::degrade::{NoiseParams, Severity};
use crate::error::{Error, Result};

/// Sign of the EPI term. `AsWritten` uses `alpha * epi`, so a model that
/// answers well is pushed harder; `Inverted` uses `alpha * (1 - epi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpiPolarity {
    #[default]
    AsWritten,
    Inverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityRange {
    pub min: f64,
    pub max: f64,
}

impl SeverityRange {
    pub fn new(min: f64, max: f64) -> Self {
        SeverityRange { min, max }
    }

    fn at(&self, lambda: f64) -> f64 {
        self.min + (self.max - self.min) * lambda
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::Config(format!(
                "{what} range needs min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Bitrate endpoints: `clean` at severity 0, `harsh` at severity 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitrateRange {
    pub harsh: u8,
    pub clean: u8,
}

impl Default for BitrateRange {
    fn default() -> Self {
        BitrateRange { harsh: 1, clean: 5 }
    }
}

fn default_alpha() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    0.5
}
fn default_motion() -> SeverityRange {
    SeverityRange::new(0.0, 8.0)
}
fn default_gain() -> SeverityRange {
    SeverityRange::new(1.0, 16.0)
}
fn default_window() -> usize {
    1
}
fn default_photon_budget() -> f64 {
    2000.0
}
fn default_read_sigma() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratorConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub epi_polarity: EpiPolarity,
    /// f1: blur extent in pixels.
    #[serde(default = "default_motion")]
    pub motion: SeverityRange,
    /// f2: ISO-proportional analog gain.
    #[serde(default = "default_gain")]
    pub gain: SeverityRange,
    /// f3: bitrate in Mbps, decreasing with severity.
    #[serde(default)]
    pub bitrate: BitrateRange,
    #[serde(default)]
    pub lambda_init: f64,
    /// Number of past judgments pooled into EPI/HR.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Expected photon count at full scale and unit gain.
    #[serde(default = "default_photon_budget")]
    pub photon_budget: f64,
    #[serde(default = "default_read_sigma")]
    pub read_sigma: f64,
}

impl Default for CalibratorConfig {
    fn default() -> Self {
        CalibratorConfig {
            alpha: default_alpha(),
            beta: default_beta(),
            epi_polarity: EpiPolarity::default(),
            motion: default_motion(),
            gain: default_gain(),
            bitrate: BitrateRange::default(),
            lambda_init: 0.0,
            window: default_window(),
            photon_budget: default_photon_budget(),
            read_sigma: default_read_sigma(),
        }
    }
}

impl CalibratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::Config(format!(
                "alpha and beta must be >= 0, got {} and {}",
                self.alpha, self.beta
            )));
        }
        self.motion.validate("motion")?;
        self.gain.validate("gain")?;
        if self.gain.min <= 0.0 {
            return Err(Error::Config("gain range must be positive".into()));
        }
        let BitrateRange { harsh, clean } = self.bitrate;
        if !(1..=5).contains(&harsh) || !(1..=5).contains(&clean) || harsh > clean {
            return Err(Error::Config(format!(
                "bitrate range needs 1 <= harsh <= clean <= 5, got {harsh}..{clean}"
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda_init) {
            return Err(Error::Config("lambda_init must lie in [0,1]".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("feedback window must be >= 1".into()));
        }
        if !(self.photon_budget > 0.0) || !(self.read_sigma >= 0.0) {
            return Err(Error::Config(
                "photon budget must be > 0 and read sigma >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceFeedback {
    pub epi: f64,
    pub hr: f64,
}

impl PerformanceFeedback {
    pub fn new(epi: f64, hr: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epi) || !(0.0..=1.0).contains(&hr) {
            return Err(Error::InvalidParameter(format!(
                "feedback must lie in [0,1], got epi={epi} hr={hr}"
            )));
        }
        Ok(PerformanceFeedback { epi, hr })
    }

    /// Accuracy and invalid-answer fraction over a set of judgments.
    pub fn from_judgments(valid: &[bool]) -> Option<Self> {
        if valid.is_empty() {
            return None;
        }
        let n = valid.len() as f64;
        let ok = valid.iter().filter(|v| **v).count() as f64;
        Some(PerformanceFeedback {
            epi: ok / n,
            hr: (n - ok) / n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    pub lambda: f64,
    pub motion_sigma: f64,
    pub gain: f64,
    pub bitrate: u8,
}

impl DegradationParams {
    /// Sensor-model parameters for this severity. Higher ISO gain means fewer
    /// photons per unit intensity, so the Poisson scale is `photon_budget / gain`.
    pub fn noise_params(&self, config: &CalibratorConfig, seed: u64) -> NoiseParams {
        NoiseParams {
            gain: config.photon_budget / self.gain,
            read_sigma: config.read_sigma,
            seed,
        }
    }

    /// Operator strengths for the frame pipeline.
    pub fn severity(&self, config: &CalibratorConfig) -> Severity {
        Severity {
            lambda: self.lambda,
            motion_extent: self.motion_sigma,
            photon_gain: config.photon_budget / self.gain,
            read_sigma: config.read_sigma,
            bitrate: self.bitrate,
            epsilon_sigma: 0.0,
        }
    }
}

/// `clamp(alpha * epi + beta * hr, 0, 1)`, with the EPI sign set by the config.
pub fn next_lambda(config: &CalibratorConfig, feedback: &PerformanceFeedback) -> f64 {
    let epi = match config.epi_polarity {
        EpiPolarity::AsWritten => feedback.epi,
        EpiPolarity::Inverted => 1.0 - feedback.epi,
    };
    (config.alpha * epi + config.beta * feedback.hr).clamp(0.0, 1.0)
}

pub fn map_to_params(config: &CalibratorConfig, lambda: f64) -> DegradationParams {
    let lambda = lambda.clamp(0.0, 1.0);
    let BitrateRange { harsh, clean } = config.bitrate;
    let bitrate = (f64::from(clean) - f64::from(clean - harsh) * lambda).round() as u8;
    DegradationParams {
        lambda,
        motion_sigma: config.motion.at(lambda),
        gain: config.gain.at(lambda),
        bitrate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub t: usize,
    pub feedback: Option<PerformanceFeedback>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratorState {
    pub t: usize,
    pub lambda: f64,
    pub params: DegradationParams,
    pub audit: Vec<AuditEntry>,
}

impl CalibratorState {
    pub fn initial(config: &CalibratorConfig) -> Self {
        CalibratorState {
            t: 0,
            lambda: config.lambda_init,
            params: map_to_params(config, config.lambda_init),
            audit: Vec::new(),
        }
    }
}

/// One control step. Without feedback (the first frame) severity stays at its
/// current value; with feedback it is recomputed from scratch.
pub fn step(
    config: &CalibratorConfig,
    state: &mut CalibratorState,
    feedback: Option<PerformanceFeedback>,
) -> (f64, DegradationParams) {
    let lambda = match &feedback {
        Some(fb) => next_lambda(config, fb),
        None => state.lambda,
    };
    let params = map_to_params(config, lambda);
    state.audit.push(AuditEntry {
        t: state.t,
        feedback,
        lambda,
    });
    state.t += 1;
    state.lambda = lambda;
    state.params = params;
    (lambda, params)
}

/// Recomputes every audited severity from its recorded feedback.
pub fn replay_audit(config: &CalibratorConfig, audit: &[AuditEntry]) -> bool {
    let mut prev = config.lambda_init;
    audit.iter().all(|e| {
        let expect = match &e.feedback {
            Some(fb) => next_lambda(config, fb),
            None => prev,
        };
        prev = e.lambda;
        expect == e.lambda
    })
}

/// Rolling window of judgments feeding the calibrator.
#[derive(Debug, Clone)]
pub struct FeedbackWindow {
    capacity: usize,
    judgments: VecDeque<bool>,
}

impl FeedbackWindow {
    pub fn new(capacity: usize) -> Self {
        FeedbackWindow {
            capacity: capacity.max(1),
            judgments: VecDeque::new(),
        }
    }

    pub fn push(&mut self, valid: bool) -> PerformanceFeedback {
        if self.judgments.len() == self.capacity {
            self.judgments.pop_front();
        }
        self.judgments.push_back(valid);
        let v: Vec<bool> = self.judgments.iter().copied().collect();
        PerformanceFeedback::from_judgments(&v).expect("window is non-empty after push")
    }
}
