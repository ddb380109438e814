use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::CalibratorConfig;
use crate::degrade::{CompressionBackend, DegradationSchedule};
use crate::error::{Error, Result};
use crate::eval::AliasTable;
use crate::tasks::{GeneratorSettings, DEFAULT_WINDOW};
use crate::uir::EnsembleConfig;

use super::client::ModelEndpoint;
use super::mock::MockScript;
use super::scene::SceneSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Where frames and annotations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SequenceSource {
    /// Image files (sorted by name) plus an annotation table.
    Files {
        image_dir: PathBuf,
        annotations: PathBuf,
    },
    /// A seeded scene of rendered rectangles, regenerated per episode.
    Synthetic(SceneSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Endpoint(ModelEndpoint),
    Mock(MockScript),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskSettings {
    pub memory_window: usize,
    #[serde(flatten)]
    pub generator: GeneratorSettings,
    /// Frames at which the most recent unresolved wrong answer is asked again.
    pub requery_frames: Vec<usize>,
    /// Previous turns sent as dialogue context; `None` sends the whole episode.
    pub context_turns: Option<usize>,
    /// How many recent turns feed the uncertainty focus.
    pub focus_lookback: usize,
}

impl Default for TaskSettings {
    fn default() -> Self {
        TaskSettings {
            memory_window: DEFAULT_WINDOW,
            generator: GeneratorSettings::default(),
            requery_frames: Vec::new(),
            context_turns: None,
            focus_lookback: 2,
        }
    }
}

fn default_episodes() -> usize {
    1
}

fn default_workers() -> usize {
    1
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub master_seed: u64,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub sequence: SequenceSource,
    pub schedule: DegradationSchedule,
    #[serde(default)]
    pub calibrator: CalibratorConfig,
    #[serde(default)]
    pub tasks: TaskSettings,
    #[serde(default)]
    pub codec: CompressionBackend,
    #[serde(default)]
    pub aliases: AliasTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uir: Option<EnsembleConfig>,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// A small all-synthetic configuration driven by a mock model.
    pub fn synthetic(master_seed: u64, schedule: DegradationSchedule, mock: MockScript) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            master_seed,
            episodes: 1,
            workers: 1,
            sequence: SequenceSource::Synthetic(SceneSpec::default()),
            schedule,
            calibrator: CalibratorConfig::default(),
            tasks: TaskSettings::default(),
            codec: CompressionBackend::default(),
            aliases: AliasTable::default(),
            uir: None,
            model: ModelSpec::Mock(mock),
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config = Self::parse_unchecked(text)?;
        config.validate()?;
        Ok(config)
    }

    fn parse_unchecked(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse_unchecked(&text)?;
        // Relative data paths are taken relative to the config file.
        if let (
            SequenceSource::Files {
                image_dir,
                annotations,
            },
            Some(base),
        ) = (&mut config.sequence, path.parent())
        {
            for p in [image_dir, annotations] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.schedule.validate()?;
        self.calibrator.validate()?;
        self.tasks.generator.validate()?;
        if self.tasks.memory_window == 0 {
            return Err(Error::Config("memory_window must be at least 1".into()));
        }
        if let Some(f) = self
            .tasks
            .requery_frames
            .iter()
            .find(|f| **f >= self.schedule.length)
        {
            return Err(Error::Config(format!(
                "requery frame {f} is outside the episode of {} frames",
                self.schedule.length
            )));
        }
        if let Some(uir) = &self.uir {
            uir.validate()?;
        }
        match &self.sequence {
            SequenceSource::Files {
                image_dir,
                annotations,
            } => {
                if !image_dir.is_dir() {
                    return Err(Error::Config(format!(
                        "image directory {} does not exist",
                        image_dir.display()
                    )));
                }
                if !annotations.is_file() {
                    return Err(Error::Config(format!(
                        "annotation file {} does not exist",
                        annotations.display()
                    )));
                }
            }
            SequenceSource::Synthetic(scene) => scene.validate()?,
        }
        match &self.model {
            ModelSpec::Endpoint(e) => e.validate()?,
            ModelSpec::Mock(m) => m.validate()?,
        }
        Ok(())
    }
}
