//! Uncertainty-guided pseudo-labelling.
//!
//! A perturbable model is queried K times under varied input perturbations and
//! dropout rates. Disagreement is measured as the mean pairwise Jensen-Shannon
//! divergence of the runs' answer distributions, feature spread around a
//! Hodges-Lehmann centre raises the dropout rate for the next round, and an
//! answer is retained only when the divergence falls strictly below `tau`.

mod divergence;
pub mod mock;
mod refine;
mod robust;
mod tune;

pub use divergence::{ensemble_uncertainty, js_divergence, pairwise_js};
pub use refine::{adapt_dropout, consensus, perturb_image, refine_loop, uncertainty_report};
pub use robust::{hl_dispersion, hl_estimate};
pub use tune::{default_tau_grid, tune_threshold, ThresholdChoice};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Image;

/// How one ensemble member was perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub noise_level: f64,
    pub dropout_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRun {
    pub answer: String,
    /// Distribution over the model's answer space, shared by all runs.
    pub dist: Vec<f64>,
    pub features: Vec<f64>,
    pub perturbation: Perturbation,
}

impl InferenceRun {
    pub fn validate(&self) -> Result<()> {
        if self.dist.is_empty() || self.dist.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Validation(
                "answer distribution must be non-empty and non-negative".into(),
            ));
        }
        let total: f64 = self.dist.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "answer distribution sums to {total}"
            )));
        }
        if self.features.iter().any(|h| !h.is_finite()) {
            return Err(Error::Validation("feature vector must be finite".into()));
        }
        Ok(())
    }
}

/// A model that accepts perturbation parameters alongside each request.
pub trait PerturbableModel {
    fn infer(
        &mut self,
        image: &Image,
        query: &str,
        perturbation: &Perturbation,
    ) -> Result<InferenceRun>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub k: usize,
    pub r0: f64,
    pub gamma: f64,
    pub hl_weight: f64,
    pub tau: f64,
    pub max_rounds: usize,
    pub r_max: f64,
    /// Input perturbation levels in `[0, 1]`, cycled across ensemble members.
    pub noise_levels: Vec<f64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            k: 5,
            r0: 0.1,
            gamma: 0.5,
            hl_weight: 1.0,
            tau: 0.15,
            max_rounds: 3,
            r_max: 0.9,
            noise_levels: vec![0.0, 0.05, 0.1],
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.k < 2 {
            return bad("ensemble size k must be at least 2");
        }
        if !(0.0..1.0).contains(&self.r0) {
            return bad("base dropout r0 must lie in [0, 1)");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be non-negative");
        }
        if !(self.hl_weight >= 0.0 && self.hl_weight.is_finite()) {
            return bad("hl_weight must be non-negative");
        }
        // tau = 0 is accepted so that "retain nothing" can be expressed.
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad("tau must be non-negative");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1");
        }
        if !(self.r_max > 0.0 && self.r_max < 1.0) {
            return bad("r_max must lie in (0, 1)");
        }
        if self.noise_levels.is_empty()
            || self.noise_levels.iter().any(|l| !(0.0..=1.0).contains(l))
        {
            return bad("noise levels must be a non-empty list within [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub js: f64,
    pub var_hl: f64,
    pub delta_l: f64,
    pub pairs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub dropout_rate: f64,
    pub answer: String,
    pub js: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    /// Consensus answer of the last round.
    pub answer: String,
    pub retained: bool,
    /// Answer of the first, unperturbed run: the label without filtering.
    pub baseline: String,
    pub rounds_used: usize,
    pub report: UncertaintyReport,
    pub rounds: Vec<RoundSummary>,
}
