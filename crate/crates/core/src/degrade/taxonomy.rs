use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Optical,
    Sensor,
    Compression,
}

/// The operator that actually realizes a taxonomy entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorFamily {
    TrajectoryPsf,
    DiskPsf,
    SensorNoise,
    DeadPixelMask,
    FixedPattern,
    BlockCodec,
}

/// Twelve-entry degradation taxonomy, four per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegradationType {
    MotionBlur,
    CameraJitter,
    DefocusBlur,
    Glare,
    LowLightNoise,
    ReadoutNoise,
    DeadPixels,
    FixedPatternNoise,
    BlockArtifacts,
    Ringing,
    ChromaBleed,
    BitrateStarvation,
}

impl DegradationType {
    pub const ALL: [DegradationType; 12] = [
        DegradationType::MotionBlur,
        DegradationType::CameraJitter,
        DegradationType::DefocusBlur,
        DegradationType::Glare,
        DegradationType::LowLightNoise,
        DegradationType::ReadoutNoise,
        DegradationType::DeadPixels,
        DegradationType::FixedPatternNoise,
        DegradationType::BlockArtifacts,
        DegradationType::Ringing,
        DegradationType::ChromaBleed,
        DegradationType::BitrateStarvation,
    ];

    /// The three primary operators used when a schedule carries no tags.
    pub const PRIMARY: [DegradationType; 3] = [
        DegradationType::MotionBlur,
        DegradationType::LowLightNoise,
        DegradationType::BlockArtifacts,
    ];

    pub fn category(self) -> Category {
        use DegradationType::*;
        match self {
            MotionBlur | CameraJitter | DefocusBlur | Glare => Category::Optical,
            LowLightNoise | ReadoutNoise | DeadPixels | FixedPatternNoise => Category::Sensor,
            BlockArtifacts | Ringing | ChromaBleed | BitrateStarvation => Category::Compression,
        }
    }

    pub fn family(self) -> OperatorFamily {
        use DegradationType::*;
        match self {
            MotionBlur | CameraJitter => OperatorFamily::TrajectoryPsf,
            DefocusBlur | Glare => OperatorFamily::DiskPsf,
            LowLightNoise | ReadoutNoise => OperatorFamily::SensorNoise,
            DeadPixels => OperatorFamily::DeadPixelMask,
            FixedPatternNoise => OperatorFamily::FixedPattern,
            BlockArtifacts | Ringing | ChromaBleed | BitrateStarvation => {
                OperatorFamily::BlockCodec
            }
        }
    }
}
