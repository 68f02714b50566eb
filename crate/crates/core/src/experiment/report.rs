use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::run::{
    CellResult, CellSummary, GridCell, GridResult, CONFUSION_FILE, EPOCHS_FILE, GRID_FILE, METRICS_FILE,
};
use crate::experiment::{architecture_index, emit_plots, feature_index};
use crate::features::FeatureKind;
use crate::models::ArchitectureKind;
use crate::train_eval::{ConfusionMatrix, EpochLog};

pub const TABLE2_TEXT: &str = "table2.txt";
pub const TABLE2_CSV: &str = "table2.csv";
pub const TABLE3_TEXT: &str = "table3.txt";
pub const TABLE3_CSV: &str = "table3.csv";

/// The on-disk outputs of one cell, as needed by reports and plots.
#[derive(Debug, Clone, PartialEq)]
pub struct CellArtifacts {
    pub summary: CellSummary,
    pub logs: Vec<EpochLog>,
    pub confusion: ConfusionMatrix,
    pub dir: PathBuf,
}

impl From<CellResult> for CellArtifacts {
    fn from(r: CellResult) -> Self {
        CellArtifacts { summary: r.summary, logs: r.logs, confusion: r.confusion, dir: r.dir }
    }
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

pub fn read_epoch_logs(path: impl AsRef<Path>) -> Result<Vec<EpochLog>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| data_err(path, e))?;
    r.deserialize().collect::<std::result::Result<Vec<EpochLog>, _>>().map_err(|e| data_err(path, e))
}

impl CellArtifacts {
    /// Reads `metrics.json`, `epochs.csv` and `confusion.txt` from a cell directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let metrics = dir.join(METRICS_FILE);
        if !metrics.exists() {
            return Err(Error::MissingFile(metrics));
        }
        let summary: CellSummary =
            serde_json::from_str(&fs::read_to_string(&metrics)?).map_err(|e| data_err(&metrics, e))?;
        let logs = read_epoch_logs(dir.join(EPOCHS_FILE))?;
        let confusion_path = dir.join(CONFUSION_FILE);
        if !confusion_path.exists() {
            return Err(Error::MissingFile(confusion_path));
        }
        let confusion = ConfusionMatrix::from_text(&fs::read_to_string(&confusion_path)?)?;
        Ok(CellArtifacts { summary, logs, confusion, dir: dir.to_path_buf() })
    }

    /// Every cell under `<output_dir>/cells`, in canonical grid order.
    pub fn load_all(output_dir: impl AsRef<Path>) -> Result<Vec<Self>> {
        let root = output_dir.as_ref().join("cells");
        if !root.is_dir() {
            return Err(Error::MissingFile(root));
        }
        let mut cells = Vec::new();
        for entry in fs::read_dir(&root)? {
            let path = entry?.path();
            if path.join(METRICS_FILE).exists() {
                cells.push(Self::load(&path)?);
            }
        }
        cells.sort_by_key(|c| c.summary.cell_index);
        Ok(cells)
    }

    pub fn grid_cell(&self) -> GridCell {
        GridCell {
            feature: self.summary.feature,
            architecture: self.summary.architecture,
            cell_index: self.summary.cell_index,
            seed: self.summary.seed,
            dir: self.dir.clone(),
            epochs_csv: Some(self.dir.join(EPOCHS_FILE)),
            wall_seconds: self.logs.iter().map(|l| l.seconds).sum(),
            metrics: Some(self.summary.metrics.clone()),
            error: None,
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn ordered(cells: &[GridCell]) -> Vec<&GridCell> {
    let mut v: Vec<&GridCell> = cells.iter().collect();
    v.sort_by_key(|c| (architecture_index(c.architecture), feature_index(c.feature)));
    v
}

/// Model-major rows of accuracy, weighted precision, recall and F1 in
/// percent, plus balanced accuracy. Failed cells show their stage.
pub fn table2_text(cells: &[GridCell]) -> String {
    let mut s = String::new();
    let header = ["Model", "Feature", "Acc.(%)", "Prec.(%)", "Rec.(%)", "F1.(%)", "BalAcc.(%)"];
    writeln!(s, "{:<16}{:<17}{:>9}{:>10}{:>9}{:>9}{:>12}", header[0], header[1], header[2], header[3], header[4], header[5], header[6]).unwrap();
    let rule = "-".repeat(82);
    let mut last = None;
    for c in ordered(cells) {
        if last != Some(c.architecture) {
            s.push_str(&rule);
            s.push('\n');
        }
        let model = if last == Some(c.architecture) { "" } else { c.architecture.display_name() };
        last = Some(c.architecture);
        match &c.metrics {
            Some(m) => writeln!(
                s,
                "{:<16}{:<17}{:>9}{:>10}{:>9}{:>9}{:>12}",
                model,
                c.feature.display_name(),
                pct(m.accuracy),
                pct(m.weighted_precision),
                pct(m.weighted_recall),
                pct(m.weighted_f1),
                pct(m.balanced_accuracy)
            ),
            None => {
                let stage = c.error.as_ref().map(|e| e.stage.name()).unwrap_or("unknown");
                writeln!(s, "{:<16}{:<17}  failed at stage `{stage}`", model, c.feature.display_name())
            }
        }
        .unwrap();
    }
    s.push_str(&rule);
    s.push('\n');
    s
}

/// Same rows as [`table2_text`] with unrounded fractions.
pub fn table2_csv(cells: &[GridCell]) -> String {
    let mut s = String::from("model,feature,accuracy,precision,recall,f1,balanced_accuracy,status\n");
    for c in ordered(cells) {
        let (a, f) = (c.architecture.display_name(), c.feature.display_name());
        match &c.metrics {
            Some(m) => writeln!(
                s,
                "{a},{f},{},{},{},{},{},ok",
                m.accuracy, m.weighted_precision, m.weighted_recall, m.weighted_f1, m.balanced_accuracy
            ),
            None => {
                let stage = c.error.as_ref().map(|e| e.stage.name()).unwrap_or("unknown");
                writeln!(s, "{a},{f},,,,,,failed:{stage}")
            }
        }
        .unwrap();
    }
    s
}

/// Highest-accuracy feature per architecture; ties go to the feature listed
/// first. Architectures without a successful cell are omitted.
pub fn best_features(cells: &[GridCell]) -> Vec<(ArchitectureKind, FeatureKind, f64)> {
    let mut out = Vec::new();
    for arch in ArchitectureKind::ALL {
        let mut best: Option<(FeatureKind, f64)> = None;
        for c in ordered(cells).into_iter().filter(|c| c.architecture == arch) {
            if let Some(m) = &c.metrics {
                if best.is_none_or(|(_, acc)| m.accuracy > acc) {
                    best = Some((c.feature, m.accuracy));
                }
            }
        }
        if let Some((f, acc)) = best {
            out.push((arch, f, acc));
        }
    }
    out
}

fn table3_label(a: ArchitectureKind) -> String {
    match a {
        ArchitectureKind::Cnn => "CNN (Baseline)".into(),
        ArchitectureKind::Ymcm => "YMCM (Proposed)".into(),
        other => other.display_name().into(),
    }
}

pub fn table3_text(cells: &[GridCell]) -> String {
    let mut s = format!("{:<18}{:<18}{:>10}\n", "Model", "Optimal Feature", "Accuracy");
    s.push_str(&"-".repeat(46));
    s.push('\n');
    for (a, f, acc) in best_features(cells) {
        writeln!(s, "{:<18}{:<18}{:>9}%", table3_label(a), f.display_name(), pct(acc)).unwrap();
    }
    s.push_str(&"-".repeat(46));
    s.push('\n');
    s
}

pub fn table3_csv(cells: &[GridCell]) -> String {
    let mut s = String::from("model,optimal_feature,accuracy\n");
    for (a, f, acc) in best_features(cells) {
        writeln!(s, "{},{},{acc}", a.display_name(), f.display_name()).unwrap();
    }
    s
}

/// Writes both tables, as text and CSV, into `dir`.
pub fn write_tables(dir: &Path, cells: &[GridCell]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(TABLE2_TEXT), table2_text(cells))?;
    fs::write(dir.join(TABLE2_CSV), table2_csv(cells))?;
    fs::write(dir.join(TABLE3_TEXT), table3_text(cells))?;
    fs::write(dir.join(TABLE3_CSV), table3_csv(cells))?;
    Ok(())
}

/// Rebuilds tables and plots from the artifacts of an earlier run. Failure
/// records come from `grid.json` when it exists.
pub fn report_from_dir(output_dir: impl AsRef<Path>) -> Result<Vec<GridCell>> {
    let dir = output_dir.as_ref();
    let grid_path = dir.join(GRID_FILE);
    let artifacts = if dir.join("cells").is_dir() || !grid_path.exists() { CellArtifacts::load_all(dir)? } else { Vec::new() };
    let mut cells: Vec<GridCell> = artifacts.iter().map(CellArtifacts::grid_cell).collect();
    if grid_path.exists() {
        let grid = GridResult::load(&grid_path)?;
        for failed in grid.failures() {
            if !cells.iter().any(|c| c.cell_index == failed.cell_index) {
                cells.push(failed.clone());
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Data(format!("no cell artifacts under {}", dir.display())));
    }
    cells.sort_by_key(|c| c.cell_index);
    write_tables(dir, &cells)?;
    if !artifacts.is_empty() {
        emit_plots(&dir.join("plots"), &artifacts)?;
    }
    Ok(cells)
}
