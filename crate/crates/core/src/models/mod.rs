//! Declarative architectures, shape inference and trainable instances.

mod adapt;
mod builders;
mod instance;
mod spec;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adapt::{adapt_input, adapted_rows, input_geometry, stack_batch, MIN_INPUT_ROWS};
pub use builders::{build_alexnet, build_baseline_cnn, build_mobilenet_mini, build_vgg16_mini, build_ymcm, NUM_CLASSES};
pub use instance::{ModelInstance, OUTPUT_GAIN};
pub use spec::{ArchitectureSpec, LayerShape, LayerSpec};

/// The five architectures of the benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitectureKind {
    AlexNet,
    Vgg16,
    MobileNet,
    Cnn,
    Ymcm,
}

impl ArchitectureKind {
    /// Report order.
    pub const ALL: [ArchitectureKind; 5] = [
        ArchitectureKind::AlexNet,
        ArchitectureKind::Vgg16,
        ArchitectureKind::MobileNet,
        ArchitectureKind::Cnn,
        ArchitectureKind::Ymcm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ArchitectureKind::AlexNet => "alexnet",
            ArchitectureKind::Vgg16 => "vgg16",
            ArchitectureKind::MobileNet => "mobilenet",
            ArchitectureKind::Cnn => "cnn",
            ArchitectureKind::Ymcm => "ymcm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ArchitectureKind::AlexNet => "AlexNet",
            ArchitectureKind::Vgg16 => "VGG16-mini",
            ArchitectureKind::MobileNet => "MobileNet-mini",
            ArchitectureKind::Cnn => "CNN",
            ArchitectureKind::Ymcm => "YMCM",
        }
    }

    pub fn build(self) -> ArchitectureSpec {
        match self {
            ArchitectureKind::AlexNet => build_alexnet(),
            ArchitectureKind::Vgg16 => build_vgg16_mini(),
            ArchitectureKind::MobileNet => build_mobilenet_mini(),
            ArchitectureKind::Cnn => build_baseline_cnn(),
            ArchitectureKind::Ymcm => build_ymcm(),
        }
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let key = key.trim_end_matches("mini");
        Self::ALL
            .into_iter()
            .find(|k| k.id() == key || (key == "baseline" && *k == ArchitectureKind::Cnn))
            .ok_or_else(|| Error::Config(format!("unknown architecture `{s}`")))
    }
}
