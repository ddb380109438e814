//! Scripted stand-ins for the model under test.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::{FrameHints, ModelRequest, VisionModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "behavior", rename_all = "snake_case")]
pub enum MockBehavior {
    /// Always answers with the answer key.
    Echo,
    /// Always answers with the same text.
    Fixed { answer: String },
    /// Wrong exactly on corrupted frames.
    WrongOnCorrupted,
    /// Wrong from the first corrupted frame on, clean frames included, until an
    /// explicit re-query snaps it out.
    Inertia,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(flatten)]
    pub behavior: MockBehavior,
    /// Answer given when wrong on a non yes/no question. Defaults to "blue truck".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrong_answer: Option<String>,
    /// Fraction of ensemble runs that hallucinate during pseudo-labelling.
    #[serde(default)]
    pub uir_outlier_rate: f64,
}

impl MockScript {
    pub fn new(behavior: MockBehavior) -> Self {
        MockScript {
            behavior,
            wrong_answer: None,
            uir_outlier_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.uir_outlier_rate) {
            return Err(Error::Config("uir_outlier_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

impl FromStr for MockScript {
    type Err = Error;

    /// `echo`, `inertia`, `wrong_on_corrupted` or `fixed:<answer>`.
    fn from_str(s: &str) -> Result<Self> {
        let behavior = match s {
            "echo" => MockBehavior::Echo,
            "inertia" => MockBehavior::Inertia,
            "wrong_on_corrupted" => MockBehavior::WrongOnCorrupted,
            _ => match s.strip_prefix("fixed:") {
                Some(answer) => MockBehavior::Fixed {
                    answer: answer.to_string(),
                },
                None => {
                    return Err(Error::Config(format!(
                        "unknown mock `{s}` (expected echo, inertia, wrong_on_corrupted or fixed:<answer>)"
                    )))
                }
            },
        };
        Ok(MockScript::new(behavior))
    }
}

/// A plausible wrong answer for `key`: yes/no flip, otherwise the scripted
/// hallucination.
pub fn wrong_answer(key: &str, scripted: Option<&str>) -> String {
    if key == "yes" || key.starts_with("yes,") {
        return "no".into();
    }
    if key == "no" {
        return "yes".into();
    }
    let fallback = scripted.unwrap_or("blue truck");
    if fallback == key {
        "red car".into()
    } else {
        fallback.into()
    }
}

#[derive(Debug, Clone)]
pub struct MockModel {
    script: MockScript,
    stuck: bool,
}

impl MockModel {
    pub fn new(script: MockScript) -> Self {
        MockModel {
            script,
            stuck: false,
        }
    }
}

impl VisionModel for MockModel {
    fn answer(&mut self, _: &ModelRequest<'_>, hints: &FrameHints<'_>) -> Result<String> {
        let wrong = || wrong_answer(hints.answer_key, self.script.wrong_answer.as_deref());
        Ok(match &self.script.behavior {
            MockBehavior::Echo => hints.answer_key.to_string(),
            MockBehavior::Fixed { answer } => answer.clone(),
            MockBehavior::WrongOnCorrupted => {
                if hints.corrupted {
                    wrong()
                } else {
                    hints.answer_key.to_string()
                }
            }
            MockBehavior::Inertia => {
                if hints.corrupted {
                    self.stuck = true;
                } else if hints.requery {
                    self.stuck = false;
                }
                if self.stuck {
                    wrong()
                } else {
                    hints.answer_key.to_string()
                }
            }
        })
    }
}
