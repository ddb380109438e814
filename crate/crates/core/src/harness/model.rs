use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imaging::Image;
use crate::seed::derive_seed;
use crate::tasks::Task;
use crate::uir::mock::{DeterministicModel, PlantedTruthModel};
use crate::uir::PerturbableModel;

use super::client::HttpModel;
use super::config::ModelSpec;
use super::mock::{wrong_answer, MockModel};

/// One earlier exchange of the dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextTurn {
    pub query: String,
    pub answer: String,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelRequest<'a> {
    pub image: &'a Image,
    pub query: &'a str,
    pub context: &'a [ContextTurn],
    pub seed: u64,
}

/// Ground-truth side information. Only in-process mocks look at it; it is
/// never sent over the wire.
#[derive(Debug, Clone, Copy)]
pub struct FrameHints<'a> {
    pub corrupted: bool,
    pub requery: bool,
    pub answer_key: &'a str,
}

/// The model under test.
pub trait VisionModel: Send {
    fn answer(&mut self, request: &ModelRequest<'_>, hints: &FrameHints<'_>) -> Result<String>;
}

pub(crate) fn build_model(spec: &ModelSpec) -> Result<Box<dyn VisionModel>> {
    Ok(match spec {
        ModelSpec::Endpoint(e) => Box::new(HttpModel::new(e.clone())?),
        ModelSpec::Mock(script) => Box::new(MockModel::new(script.clone())),
    })
}

/// Perturbable model used to pseudo-label `task`.
pub(crate) fn build_perturbable(
    spec: &ModelSpec,
    task: &Task,
    seed: u64,
) -> Result<Box<dyn PerturbableModel>> {
    Ok(match spec {
        ModelSpec::Endpoint(e) => Box::new(HttpModel::new(e.clone())?),
        ModelSpec::Mock(script) if script.uir_outlier_rate > 0.0 => {
            let wrong = wrong_answer(&task.answer_key, script.wrong_answer.as_deref());
            let mut m = PlantedTruthModel::new(
                vec![task.answer_key.clone(), wrong],
                derive_seed(seed, &[1]),
            );
            m.easy_accuracy = 1.0;
            m.outlier_rate = script.uir_outlier_rate;
            m.insert(task.query.clone(), task.answer_key.clone(), false);
            Box::new(m)
        }
        ModelSpec::Mock(_) => Box::new(DeterministicModel::new(
            task.answer_key.clone(),
            vec![1.0, 0.0],
            vec![1.0, 0.0],
        )),
    })
}
