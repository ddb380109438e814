use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{judge, AliasTable};
use crate::imaging::Image;
use crate::seed::{derive_seed, purpose};
use crate::tasks::Task;
use crate::uir::{refine_loop, EnsembleConfig, PerturbableModel, PseudoLabel};

/// One question to pseudo-label.
#[derive(Debug, Clone, Copy)]
pub struct UirItem<'a> {
    pub frame: usize,
    pub image: &'a Image,
    pub task: &'a Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UirLabel {
    pub frame: usize,
    pub fact: String,
    pub query: String,
    /// Annotation-derived key, kept for auditing the pseudo-label.
    pub answer_key: String,
    pub label: PseudoLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UirSummary {
    pub labels: Vec<UirLabel>,
    pub retained: usize,
    pub retention: f64,
    /// Agreement of retained labels with the annotation keys.
    pub retained_accuracy: Option<f64>,
    /// Agreement of the unfiltered first-run answers with the annotation keys.
    pub baseline_accuracy: Option<f64>,
}

impl UirSummary {
    /// Retained labels keyed by `(frame, fact)`, ready to replace answer keys.
    pub fn answer_keys(&self) -> BTreeMap<(usize, String), String> {
        self.labels
            .iter()
            .filter(|l| l.label.retained)
            .map(|l| ((l.frame, l.fact.clone()), l.label.answer.clone()))
            .collect()
    }
}

/// Runs the refinement loop on every item. `models` supplies a perturbable
/// model per task; the ensemble seed of an item depends on its frame and fact.
pub fn annotate_with_uir(
    config: &EnsembleConfig,
    items: &[UirItem<'_>],
    models: &mut dyn FnMut(&Task) -> Result<Box<dyn PerturbableModel>>,
    seed: u64,
    aliases: &AliasTable,
) -> Result<UirSummary> {
    let mut labels = Vec::with_capacity(items.len());
    for item in items {
        let mut model = models(item.task)?;
        let fact = item.task.fact_key();
        let item_seed = derive_seed(
            seed,
            &[
                item.frame as u64,
                purpose::ENSEMBLE,
                crate::uir::mock::stable_hash(&fact),
            ],
        );
        let label = refine_loop(
            model.as_mut(),
            item.image,
            &item.task.query,
            config,
            item_seed,
        )?;
        labels.push(UirLabel {
            frame: item.frame,
            fact,
            query: item.task.query.clone(),
            answer_key: item.task.answer_key.clone(),
            label,
        });
    }
    let retained = labels.iter().filter(|l| l.label.retained).count();
    if retained == 0 && !labels.is_empty() {
        log::warn!("no pseudo-labels retained out of {}", labels.len());
    }
    let accuracy = |pick: &dyn Fn(&UirLabel) -> Option<&str>| {
        let scored: Vec<bool> = labels
            .iter()
            .filter_map(|l| pick(l).map(|a| judge(a, &l.answer_key, aliases)))
            .collect();
        (!scored.is_empty())
            .then(|| scored.iter().filter(|ok| **ok).count() as f64 / scored.len() as f64)
    };
    Ok(UirSummary {
        retention: if labels.is_empty() {
            0.0
        } else {
            retained as f64 / labels.len() as f64
        },
        retained_accuracy: accuracy(&|l| l.label.retained.then_some(l.label.answer.as_str())),
        baseline_accuracy: accuracy(&|l| Some(l.label.baseline.as_str())),
        retained,
        labels,
    })
}
