use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::imaging::{convolve2d, Boundary, Image, Kernel};
use crate::seed::derive_seed;

use super::divergence::{mean_upper, pairwise_js};
use super::robust::{hl_dispersion, hl_estimate};
use super::{
    EnsembleConfig, InferenceRun, PerturbableModel, Perturbation, PseudoLabel, RoundSummary,
    UncertaintyReport,
};

/// Divergence, feature dispersion and their combination for one ensemble.
pub fn uncertainty_report(runs: &[InferenceRun], hl_weight: f64) -> Result<UncertaintyReport> {
    let dists: Vec<&[f64]> = runs.iter().map(|r| r.dist.as_slice()).collect();
    if dists.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "an ensemble needs at least 2 runs, got {}",
            dists.len()
        )));
    }
    let pairs = pairwise_js(&dists)?;
    let js = mean_upper(&pairs);
    let features: Vec<&[f64]> = runs.iter().map(|r| r.features.as_slice()).collect();
    let var_hl = if features.iter().all(|f| f.is_empty()) {
        0.0
    } else {
        hl_dispersion(&features, &hl_estimate(&features)?)?
    };
    Ok(UncertaintyReport {
        js,
        var_hl,
        delta_l: js + hl_weight * var_hl,
        pairs,
    })
}

/// `clamp(r0 + gamma * delta_l, 0, r_max)`.
pub fn adapt_dropout(config: &EnsembleConfig, report: &UncertaintyReport) -> f64 {
    (config.r0 + config.gamma * report.delta_l).clamp(0.0, config.r_max)
}

/// Most frequent answer; ties go to the answer of the run with the lowest seed.
pub fn consensus(runs: &[InferenceRun]) -> Option<String> {
    let mut tally: BTreeMap<&str, (usize, u64)> = BTreeMap::new();
    for r in runs {
        let e = tally.entry(r.answer.as_str()).or_insert((0, u64::MAX));
        e.0 += 1;
        e.1 = e.1.min(r.perturbation.seed);
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(a, _)| a.to_string())
}

/// Contrast reduction toward the mean by `level`, then a box blur of radius
/// `floor(10 * level)`. Level 0 returns the input unchanged.
pub fn perturb_image(image: &Image, level: f64) -> Result<Image> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::InvalidParameter(format!(
            "perturbation level {level} outside [0, 1]"
        )));
    }
    if level == 0.0 {
        return Ok(image.clone());
    }
    let mean = image.mean();
    let contrast = 1.0 - level;
    let flat = image.with_samples(
        image
            .data()
            .iter()
            .map(|v| mean + contrast * (v - mean))
            .collect(),
    );
    let radius = (10.0 * level).floor() as usize;
    if radius == 0 {
        return Ok(flat);
    }
    let side = 2 * radius + 1;
    let kernel = Kernel::new(side, side, vec![1.0 / (side * side) as f64; side * side])?;
    convolve2d(&flat, &kernel, Boundary::Replicate)
}

/// Runs perturbed ensembles until the divergence drops below `tau` or the
/// round budget is spent. Member `i` of round `r` uses seed
/// `derive_seed(base_seed, [r, i])`.
pub fn refine_loop(
    model: &mut dyn PerturbableModel,
    image: &Image,
    query: &str,
    config: &EnsembleConfig,
    base_seed: u64,
) -> Result<PseudoLabel> {
    config.validate()?;
    let mut dropout = config.r0;
    let mut rounds = Vec::new();
    let mut baseline = None;
    let mut inputs: BTreeMap<u64, Image> = BTreeMap::new();
    for round in 0..config.max_rounds {
        let mut runs = Vec::with_capacity(config.k);
        for i in 0..config.k {
            let level = config.noise_levels[i % config.noise_levels.len()];
            let key = level.to_bits();
            if !inputs.contains_key(&key) {
                inputs.insert(key, perturb_image(image, level)?);
            }
            let perturbation = Perturbation {
                noise_level: level,
                dropout_rate: dropout,
                seed: derive_seed(base_seed, &[round as u64, i as u64]),
            };
            let fail = |cause: String| Error::Ensemble {
                round: round + 1,
                run: i,
                cause,
            };
            let run = model
                .infer(&inputs[&key], query, &perturbation)
                .map_err(|e| fail(e.to_string()))?;
            run.validate().map_err(|e| fail(e.to_string()))?;
            runs.push(run);
        }
        let report = uncertainty_report(&runs, config.hl_weight).map_err(|e| Error::Ensemble {
            round: round + 1,
            run: 0,
            cause: e.to_string(),
        })?;
        let answer = consensus(&runs).expect("k >= 2");
        let baseline = baseline.get_or_insert_with(|| runs[0].answer.clone());
        rounds.push(RoundSummary {
            dropout_rate: dropout,
            answer: answer.clone(),
            js: report.js,
        });
        let retained = report.js < config.tau;
        log::debug!(
            "round {}: js {:.4}, dropout {:.3}, answer {answer:?}",
            round + 1,
            report.js,
            dropout
        );
        if retained || round + 1 == config.max_rounds {
            return Ok(PseudoLabel {
                answer,
                retained,
                baseline: baseline.clone(),
                rounds_used: round + 1,
                report,
                rounds,
            });
        }
        dropout = adapt_dropout(config, &report);
    }
    unreachable!("max_rounds >= 1 is validated")
}
