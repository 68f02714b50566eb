use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{stratified_split, SegmentationReport, SplitAssignment};
use crate::error::{Error, ErrorClass, Result};
use crate::experiment::report::{write_tables, CellArtifacts};
use crate::experiment::{cell_index, cell_seed, emit_plots, CorpusIndex, ExperimentConfig, FeatureStore, Stage, StageError};
use crate::features::{apply_normalizer, fit_normalizer, FeatureKind, FeatureMap};
use crate::models::{adapt_input, input_geometry, ArchitectureKind, ModelInstance};
use crate::train_eval::{class_names, evaluate, train, ConfusionMatrix, Dataset, EpochLog, MetricsReport};

pub const METRICS_FILE: &str = "metrics.json";
pub const EPOCHS_FILE: &str = "epochs.csv";
pub const CONFUSION_FILE: &str = "confusion.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.ymck";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const GRID_FILE: &str = "grid.json";

/// Contents of `metrics.json`. Holds no wall-clock data, so two runs with
/// the same seed write identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub feature: FeatureKind,
    pub architecture: ArchitectureKind,
    pub cell_index: usize,
    pub seed: u64,
    pub parameters: usize,
    pub train_samples: usize,
    pub validation_samples: usize,
    pub test_samples: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub features_seconds: f64,
    pub train_seconds: f64,
    pub evaluate_seconds: f64,
    pub total_seconds: f64,
}

/// Contents of `provenance.json`: enough to rerun the cell and get the
/// same metrics back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine_version: String,
    /// SHA-256 over the metrics and checkpoint bytes.
    pub content_version: String,
    /// A one-cell configuration.
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub cell_seed: u64,
    pub cell_index: usize,
    pub corpus_hash: String,
    pub feature_fingerprint: String,
    pub timings: Timings,
}

impl Provenance {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

/// A finished cell, in memory.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub summary: CellSummary,
    pub logs: Vec<EpochLog>,
    pub confusion: ConfusionMatrix,
    pub dir: PathBuf,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub stage: Stage,
    pub message: String,
    pub exit_code: i32,
}

/// One entry of the grid: metrics on success, an error record otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub feature: FeatureKind,
    pub architecture: ArchitectureKind,
    pub cell_index: usize,
    pub seed: u64,
    pub dir: PathBuf,
    pub epochs_csv: Option<PathBuf>,
    pub wall_seconds: f64,
    pub metrics: Option<MetricsReport>,
    pub error: Option<CellError>,
}

impl CellError {
    /// Rebuilds an error of the same exit class.
    pub fn into_stage_error(self) -> StageError {
        let class = match self.exit_code {
            2 => ErrorClass::Config,
            4 => ErrorClass::Training,
            _ => ErrorClass::Data,
        };
        let error = Error::Recorded { class, message: self.message };
        StageError { stage: self.stage, error }
    }
}

impl GridCell {
    pub fn succeeded(&self) -> bool {
        self.metrics.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub features: Vec<FeatureKind>,
    pub architectures: Vec<ArchitectureKind>,
    /// Feature-major, in canonical order.
    pub cells: Vec<GridCell>,
    pub corpus_hash: String,
    pub segmentation: Option<SegmentationReport>,
    pub cache_hits: usize,
    pub cache_misses: usize,
    pub extracted_maps: usize,
    pub wall_seconds: f64,
}

impl GridResult {
    pub fn cell(&self, feature: FeatureKind, architecture: ArchitectureKind) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.feature == feature && c.architecture == architecture)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| !c.succeeded())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

/// Directory of one cell below the output directory.
pub fn cell_dir(output_dir: &Path, feature: FeatureKind, architecture: ArchitectureKind) -> PathBuf {
    output_dir.join("cells").join(format!("{}_{}", feature.id(), architecture.id()))
}

/// Train and test sets for one feature kind, sharing one split.
struct FeatureData {
    train: Dataset,
    test: Dataset,
    geometry: [usize; 3],
}

fn prepare_feature(maps: Vec<FeatureMap>, corpus: &CorpusIndex, split: &SplitAssignment) -> Result<FeatureData> {
    let train_maps: Vec<&FeatureMap> = split.train_indices.iter().map(|&i| &maps[i]).collect();
    let stats = fit_normalizer(&train_maps)?;
    let cols = maps[0].cols;
    if let Some(m) = maps.iter().find(|m| m.cols != cols) {
        return Err(Error::Shape(format!("{} maps mix {cols} and {} frames", m.kind, m.cols)));
    }
    let kind = maps[0].kind;
    let samples = maps
        .iter()
        .map(|m| apply_normalizer(m, &stats).map(|n| adapt_input(&n)))
        .collect::<Result<Vec<_>>>()?;
    let pick = |idx: &[usize]| -> Result<Dataset> {
        Dataset::new(
            idx.iter().map(|&i| samples[i].clone()).collect(),
            idx.iter().map(|&i| corpus.labels[i]).collect(),
            Some(idx.iter().map(|&i| corpus.groups[i]).collect()),
        )
    };
    Ok(FeatureData {
        train: pick(&split.train_indices)?,
        test: pick(&split.test_indices)?,
        geometry: input_geometry(kind, cols),
    })
}

struct CellContext<'a> {
    config: &'a ExperimentConfig,
    corpus_hash: &'a str,
    fingerprint: String,
    features_seconds: f64,
}

fn at(stage: Stage) -> impl Fn(Error) -> StageError {
    move |error| StageError { stage, error }
}

fn run_cell(
    ctx: &CellContext<'_>,
    data: &FeatureData,
    feature: FeatureKind,
    architecture: ArchitectureKind,
) -> std::result::Result<CellResult, StageError> {
    let start = Instant::now();
    let seed = cell_seed(ctx.config.seed, feature, architecture);
    let index = cell_index(feature, architecture);
    let dir = cell_dir(&ctx.config.output_dir, feature, architecture);
    log::info!("cell {index}: {} + {} (seed {seed})", architecture.display_name(), feature.display_name());

    let mut model = ModelInstance::new(architecture.build(), data.geometry, seed).map_err(at(Stage::Models))?;
    let train_config = crate::train_eval::TrainConfig { seed, ..ctx.config.train };
    let outcome = train(&mut model, &data.train, &train_config).map_err(at(Stage::Train))?;
    let train_seconds = start.elapsed().as_secs_f64();

    let eval_start = Instant::now();
    let evaluation = evaluate(&mut model, &data.test).map_err(at(Stage::Evaluate))?;
    let evaluate_seconds = eval_start.elapsed().as_secs_f64();

    let summary = CellSummary {
        feature,
        architecture,
        cell_index: index,
        seed,
        parameters: model.parameter_count(),
        train_samples: outcome.train_indices.len(),
        validation_samples: outcome.val_indices.len(),
        test_samples: data.test.len(),
        epochs_run: outcome.run.logs.len(),
        best_epoch: outcome.run.best_epoch,
        best_val_loss: outcome.run.best_val_loss,
        stopped_early: outcome.run.stopped_early,
        metrics: evaluation.report,
    };
    let timings = Timings {
        features_seconds: ctx.features_seconds,
        train_seconds,
        evaluate_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let result = CellResult { summary, logs: outcome.run.logs, confusion: evaluation.confusion, dir, timings };
    write_cell(ctx, &result, &model).map_err(at(Stage::Artifacts))?;
    Ok(result)
}

fn write_cell(ctx: &CellContext<'_>, cell: &CellResult, model: &ModelInstance) -> Result<()> {
    fs::create_dir_all(&cell.dir)?;
    let metrics = serde_json::to_vec_pretty(&cell.summary).map_err(|e| Error::Data(e.to_string()))?;
    fs::write(cell.dir.join(METRICS_FILE), &metrics)?;
    let mut w = csv::Writer::from_path(cell.dir.join(EPOCHS_FILE)).map_err(|e| Error::Data(e.to_string()))?;
    for log in &cell.logs {
        w.serialize(log).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush()?;
    let names = class_names(cell.confusion.classes());
    fs::write(cell.dir.join(CONFUSION_FILE), cell.confusion.to_text(&names))?;
    let checkpoint = model.checkpoint().to_bytes();
    fs::write(cell.dir.join(CHECKPOINT_FILE), &checkpoint)?;

    let mut content = Sha256::new();
    content.update(&metrics);
    content.update(&checkpoint);
    let config = ExperimentConfig {
        features: vec![cell.summary.feature.id().to_string()],
        architectures: vec![cell.summary.architecture.id().to_string()],
        cache_dir: Some(ctx.config.cache_dir()),
        ..ctx.config.clone()
    };
    let provenance = Provenance {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        content_version: hex::encode(content.finalize()),
        config_hash: config.hash(),
        config,
        seed: ctx.config.seed,
        cell_seed: cell.summary.seed,
        cell_index: cell.summary.cell_index,
        corpus_hash: ctx.corpus_hash.to_string(),
        feature_fingerprint: ctx.fingerprint.clone(),
        timings: cell.timings,
    };
    let json = serde_json::to_vec_pretty(&provenance).map_err(|e| Error::Data(e.to_string()))?;
    fs::write(cell.dir.join(PROVENANCE_FILE), json)?;
    Ok(())
}

fn failed_cell(config: &ExperimentConfig, f: FeatureKind, a: ArchitectureKind, e: &StageError) -> GridCell {
    log::error!("cell {} + {} failed: {e}", a.display_name(), f.display_name());
    GridCell {
        feature: f,
        architecture: a,
        cell_index: cell_index(f, a),
        seed: cell_seed(config.seed, f, a),
        dir: cell_dir(&config.output_dir, f, a),
        epochs_csv: None,
        wall_seconds: 0.0,
        metrics: None,
        error: Some(CellError { stage: e.stage, message: e.error.to_string(), exit_code: e.error.exit_code() }),
    }
}

/// Runs every selected (feature, architecture) cell. Stages shared by all
/// cells abort the run; a failing cell is recorded and the rest continue.
///
/// Returns the grid plus the finished cells held in memory.
pub fn run_cells(
    config: &ExperimentConfig,
    store: &FeatureStore,
) -> std::result::Result<(GridResult, Vec<CellResult>), StageError> {
    let start = Instant::now();
    config.validate().map_err(at(Stage::Config))?;
    let features = config.feature_kinds().map_err(at(Stage::Features))?;
    let architectures = config.architecture_kinds().map_err(at(Stage::Models))?;
    fs::create_dir_all(&config.output_dir).map_err(|e| at(Stage::Config)(e.into()))?;

    let corpus = CorpusIndex::materialize(&config.corpus).map_err(at(Stage::Corpus))?;
    let feature_start = Instant::now();
    let (mut maps, segmentation) = store.load_or_extract(&corpus, &features).map_err(at(Stage::Features))?;
    let features_seconds = feature_start.elapsed().as_secs_f64();
    let split = stratified_split(
        &corpus.genre_labels(),
        Some(&corpus.groups),
        config.train_ratio,
        config.split_mode,
        config.seed,
    )
    .map_err(at(Stage::Split))?;
    log::info!("split: {} train / {} test segments", split.train_indices.len(), split.test_indices.len());

    let ctx = CellContext {
        config,
        corpus_hash: &corpus.hash,
        fingerprint: store.extractor().fingerprint(),
        features_seconds,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| at(Stage::Config)(Error::Config(e.to_string())))?;

    let mut cells = Vec::new();
    let mut results = Vec::new();
    for &feature in &features {
        let feature_maps = maps.remove(&feature).expect("requested kind was loaded");
        let data = match prepare_feature(feature_maps, &corpus, &split) {
            Ok(d) => d,
            Err(error) => {
                let e = StageError { stage: Stage::Normalize, error };
                cells.extend(architectures.iter().map(|&a| failed_cell(config, feature, a, &e)));
                continue;
            }
        };
        let run = |&a: &ArchitectureKind| {
            let t = Instant::now();
            (a, run_cell(&ctx, &data, feature, a), t.elapsed().as_secs_f64())
        };
        let outcomes: Vec<_> = if config.jobs > 1 {
            pool.install(|| architectures.par_iter().map(run).collect())
        } else {
            architectures.iter().map(run).collect()
        };
        for (a, outcome, wall) in outcomes {
            match outcome {
                Ok(r) => {
                    cells.push(GridCell {
                        feature,
                        architecture: a,
                        cell_index: r.summary.cell_index,
                        seed: r.summary.seed,
                        dir: r.dir.clone(),
                        epochs_csv: Some(r.dir.join(EPOCHS_FILE)),
                        wall_seconds: wall,
                        metrics: Some(r.summary.metrics.clone()),
                        error: None,
                    });
                    results.push(r);
                }
                Err(e) => cells.push(failed_cell(config, feature, a, &e)),
            }
        }
    }

    let grid = GridResult {
        features,
        architectures,
        cells,
        corpus_hash: corpus.hash.clone(),
        segmentation,
        cache_hits: store.hits(),
        cache_misses: store.misses(),
        extracted_maps: store.extracted_maps(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((grid, results))
}

/// One cell: exactly one feature kind and one architecture. Any failure is
/// returned with the stage it happened in.
pub fn run_single(config: &ExperimentConfig) -> std::result::Result<CellResult, StageError> {
    let features = config.feature_kinds().map_err(at(Stage::Features))?;
    let architectures = config.architecture_kinds().map_err(at(Stage::Models))?;
    if features.len() != 1 || architectures.len() != 1 {
        return Err(StageError {
            stage: Stage::Config,
            error: Error::Config(format!(
                "a single run needs one feature and one architecture, got {} and {}",
                features.len(),
                architectures.len()
            )),
        });
    }
    let store = FeatureStore::new(config.cache_dir());
    let (grid, mut results) = run_cells(config, &store)?;
    match grid.cells[0].error.as_ref() {
        Some(e) => Err(e.clone().into_stage_error()),
        None => Ok(results.remove(0)),
    }
}


/// The whole grid: runs every cell, then writes `grid.json`, the summary
/// tables and the plots into the output directory.
pub fn run_grid(config: &ExperimentConfig) -> std::result::Result<GridResult, StageError> {
    let store = FeatureStore::new(config.cache_dir());
    run_grid_with(config, &store)
}

/// [`run_grid`] with a caller-owned feature store.
pub fn run_grid_with(config: &ExperimentConfig, store: &FeatureStore) -> std::result::Result<GridResult, StageError> {
    let (grid, results) = run_cells(config, store)?;
    let artifacts: Vec<CellArtifacts> = results.into_iter().map(CellArtifacts::from).collect();
    write_grid(&config.output_dir, &grid, &artifacts).map_err(at(Stage::Artifacts))?;
    log::info!(
        "grid finished in {:.1} s: {} cells, {} failed, feature cache {} hit / {} miss",
        grid.wall_seconds,
        grid.cells.len(),
        grid.failures().count(),
        grid.cache_hits,
        grid.cache_misses
    );
    Ok(grid)
}

fn write_grid(dir: &Path, grid: &GridResult, artifacts: &[CellArtifacts]) -> Result<()> {
    let json = serde_json::to_vec_pretty(grid).map_err(|e| Error::Data(e.to_string()))?;
    fs::write(dir.join(GRID_FILE), json)?;
    write_tables(dir, &grid.cells)?;
    if !artifacts.is_empty() {
        emit_plots(&dir.join("plots"), artifacts)?;
    }
    Ok(())
}

/// Reruns the cell a provenance record describes, writing into `output_dir`
/// (the recorded one when `None`).
pub fn rerun_from_provenance(
    path: impl AsRef<Path>,
    output_dir: Option<PathBuf>,
) -> std::result::Result<CellResult, StageError> {
    let provenance = Provenance::load(path).map_err(at(Stage::Config))?;
    let mut config = provenance.config;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    run_single(&config)
}

/// Extracts (or loads) feature sets without training anything.
pub fn extract_features(
    config: &ExperimentConfig,
    store: &FeatureStore,
) -> std::result::Result<(CorpusIndex, BTreeMap<FeatureKind, Vec<FeatureMap>>, Option<SegmentationReport>), StageError> {
    let kinds = config.feature_kinds().map_err(at(Stage::Features))?;
    let corpus = CorpusIndex::materialize(&config.corpus).map_err(at(Stage::Corpus))?;
    let (maps, report) = store.load_or_extract(&corpus, &kinds).map_err(at(Stage::Features))?;
    Ok((corpus, maps, report))
}
