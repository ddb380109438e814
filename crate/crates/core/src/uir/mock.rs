//! In-process perturbable models for tests, examples and offline runs.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::seed::derive_seed;

use super::{InferenceRun, PerturbableModel, Perturbation};

/// FNV-1a, stable across platforms and toolchains.
pub(crate) fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn one_hot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Returns the same run every time.
#[derive(Debug, Clone)]
pub struct DeterministicModel {
    answer: String,
    dist: Vec<f64>,
    features: Vec<f64>,
}

impl DeterministicModel {
    pub fn new(answer: impl Into<String>, dist: Vec<f64>, features: Vec<f64>) -> Self {
        DeterministicModel {
            answer: answer.into(),
            dist,
            features,
        }
    }
}

impl PerturbableModel for DeterministicModel {
    fn infer(&mut self, _: &Image, _: &str, perturbation: &Perturbation) -> Result<InferenceRun> {
        Ok(InferenceRun {
            answer: self.answer.clone(),
            dist: self.dist.clone(),
            features: self.features.clone(),
            perturbation: *perturbation,
        })
    }
}

/// Plays back a fixed queue of `(answer, distribution)` runs, then fails.
#[derive(Debug, Clone)]
pub struct ScriptedModel {
    queue: VecDeque<(String, Vec<f64>)>,
}

impl ScriptedModel {
    pub fn new(runs: Vec<(String, Vec<f64>)>) -> Self {
        ScriptedModel { queue: runs.into() }
    }
}

impl PerturbableModel for ScriptedModel {
    fn infer(&mut self, _: &Image, _: &str, perturbation: &Perturbation) -> Result<InferenceRun> {
        let (answer, dist) = self
            .queue
            .pop_front()
            .ok_or_else(|| Error::Endpoint("scripted model exhausted".into()))?;
        Ok(InferenceRun {
            features: dist.clone(),
            answer,
            dist,
            perturbation: *perturbation,
        })
    }
}

/// Cycles through its answers call by call with one-hot distributions, so an
/// ensemble is split evenly however often it is re-run.
#[derive(Debug, Clone)]
pub struct SplitModel {
    answers: Vec<String>,
    calls: usize,
}

impl SplitModel {
    pub fn new<S: Into<String>>(answers: impl IntoIterator<Item = S>) -> Self {
        SplitModel {
            answers: answers.into_iter().map(Into::into).collect(),
            calls: 0,
        }
    }
}

impl PerturbableModel for SplitModel {
    fn infer(&mut self, _: &Image, _: &str, perturbation: &Perturbation) -> Result<InferenceRun> {
        let n = self.answers.len();
        let i = self.calls % n;
        self.calls += 1;
        Ok(InferenceRun {
            answer: self.answers[i].clone(),
            dist: one_hot(n, i),
            features: one_hot(n, i),
            perturbation: *perturbation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedItem {
    pub truth: String,
    /// Hard items get an independent random answer on every run.
    pub hard: bool,
}

/// Synthetic model with known ground truth per query.
///
/// On an easy item the model holds one belief, correct with probability
/// `easy_accuracy`, and repeats it with small jitter except for runs that turn
/// into outliers at `outlier_rate`. On a hard item every run answers at random.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedTruthModel {
    pub vocabulary: Vec<String>,
    pub items: BTreeMap<String, PlantedItem>,
    pub easy_accuracy: f64,
    pub outlier_rate: f64,
    /// Mass placed on the chosen answer before jitter.
    pub peak: f64,
    pub seed: u64,
}

impl PlantedTruthModel {
    pub fn new(vocabulary: Vec<String>, seed: u64) -> Self {
        PlantedTruthModel {
            vocabulary,
            items: BTreeMap::new(),
            easy_accuracy: 0.8,
            outlier_rate: 0.0,
            peak: 0.9,
            seed,
        }
    }

    pub fn insert(&mut self, query: impl Into<String>, truth: impl Into<String>, hard: bool) {
        self.items.insert(
            query.into(),
            PlantedItem {
                truth: truth.into(),
                hard,
            },
        );
    }

    fn index_of(&self, answer: &str) -> Result<usize> {
        self.vocabulary
            .iter()
            .position(|v| v == answer)
            .ok_or_else(|| Error::Validation(format!("`{answer}` not in the vocabulary")))
    }

    fn other_than(&self, rng: &mut ChaCha8Rng, avoid: usize) -> usize {
        let n = self.vocabulary.len();
        if n == 1 {
            return avoid;
        }
        let j = rng.random_range(0..n - 1);
        if j >= avoid {
            j + 1
        } else {
            j
        }
    }

    /// The belief an easy item settles on, before outliers.
    pub fn belief(&self, query: &str) -> Result<String> {
        let item = self
            .items
            .get(query)
            .ok_or_else(|| Error::Validation(format!("no planted item for `{query}`")))?;
        let truth = self.index_of(&item.truth)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[stable_hash(query)]));
        let i = if rng.random::<f64>() < self.easy_accuracy {
            truth
        } else {
            self.other_than(&mut rng, truth)
        };
        Ok(self.vocabulary[i].clone())
    }
}

impl PerturbableModel for PlantedTruthModel {
    fn infer(
        &mut self,
        _: &Image,
        query: &str,
        perturbation: &Perturbation,
    ) -> Result<InferenceRun> {
        let n = self.vocabulary.len();
        let hard = self
            .items
            .get(query)
            .ok_or_else(|| Error::Validation(format!("no planted item for `{query}`")))?
            .hard;
        let belief = self.index_of(&self.belief(query)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            self.seed,
            &[stable_hash(query), perturbation.seed],
        ));
        let answer = if hard {
            rng.random_range(0..n)
        } else if rng.random::<f64>() < self.outlier_rate {
            self.other_than(&mut rng, belief)
        } else {
            belief
        };
        let jitter = 0.02 * (1.0 + perturbation.dropout_rate + perturbation.noise_level);
        let rest = if n > 1 {
            (1.0 - self.peak) / (n - 1) as f64
        } else {
            0.0
        };
        let mut dist: Vec<f64> = (0..n)
            .map(|i| {
                let base = if i == answer { self.peak } else { rest };
                base + jitter * rng.random::<f64>()
            })
            .collect();
        let total: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|p| *p /= total);
        Ok(InferenceRun {
            answer: self.vocabulary[answer].clone(),
            features: dist.clone(),
            dist,
            perturbation: *perturbation,
        })
    }
}
