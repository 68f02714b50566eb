//! Experiments: single runs, the feature x architecture grid, the feature
//! cache, summary tables, plots and provenance records.

mod config;
mod plots;
mod report;
mod run;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use config::{architecture_index, cell_index, cell_seed, feature_index, CorpusSource, ExperimentConfig};
pub use plots::{
    confusion_panel_svg, confusion_svg, confusion_table, curve_svg, embedded_table, emit_plots,
    parse_confusion_table, parse_curve_table, CurveMetric, CurvePoint, PANEL_ORDER,
};
pub use report::{
    best_features, read_epoch_logs, report_from_dir, table2_csv, table2_text, table3_csv, table3_text, write_tables,
    CellArtifacts, TABLE2_CSV, TABLE2_TEXT, TABLE3_CSV, TABLE3_TEXT,
};
pub use run::{
    cell_dir, extract_features, rerun_from_provenance, run_cells, run_grid, run_grid_with, run_single, CellError,
    CellResult, CellSummary, GridCell, GridResult, Provenance, Timings, CHECKPOINT_FILE, CONFUSION_FILE,
    EPOCHS_FILE, GRID_FILE, METRICS_FILE, PROVENANCE_FILE,
};
pub use store::{CorpusIndex, FeatureStore};

/// Pipeline stage an experiment failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Corpus,
    Features,
    Split,
    Normalize,
    Models,
    Train,
    Evaluate,
    Artifacts,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Corpus => "corpus",
            Stage::Features => "features",
            Stage::Split => "split",
            Stage::Normalize => "normalize",
            Stage::Models => "models",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Artifacts => "artifacts",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An error tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {error}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub error: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.error.exit_code()
    }
}
