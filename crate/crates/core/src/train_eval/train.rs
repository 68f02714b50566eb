use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Adam, Checkpoint, Mode, Tensor};
use crate::corpus::GenreLabel;
use crate::error::{Error, Result};
use crate::models::{stack_batch, ModelInstance};
use crate::train_eval::{confusion_matrix, ConfusionMatrix, MetricsReport};

/// Optimization schedule. Defaults are 50 epochs, batch 16, learning rate
/// 1e-4, patience 10 and a 10% validation carve-out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 50, batch_size: 16, learning_rate: 1e-4, patience: 10, val_fraction: 0.1, seed: 0 }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig { seed, ..TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::Config("epochs, batch size and patience must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 0.5) {
            return Err(Error::Config(format!("validation fraction {} outside (0, 0.5)", self.val_fraction)));
        }
        Ok(())
    }
}

/// Model inputs (`1×C×H×W` each) with class ids and optional recording ids.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<Tensor<f32>>,
    pub labels: Vec<usize>,
    pub groups: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(samples: Vec<Tensor<f32>>, labels: Vec<usize>, groups: Option<Vec<usize>>) -> Result<Self> {
        if samples.len() != labels.len() || groups.as_ref().is_some_and(|g| g.len() != labels.len()) {
            return Err(Error::Data("samples, labels and groups differ in length".into()));
        }
        if let Some(first) = samples.first() {
            if first.ndim() != 4 || first.shape()[0] != 1 || samples.iter().any(|s| s.shape() != first.shape()) {
                return Err(Error::Data("samples must share one 1×C×H×W shape".into()));
            }
        }
        Ok(Dataset { samples, labels, groups })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn geometry(&self) -> Option<[usize; 3]> {
        self.samples.first().map(|s| [s.shape()[1], s.shape()[2], s.shape()[3]])
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: self.groups.as_ref().map(|g| indices.iter().map(|&i| g[i]).collect()),
        }
    }

    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor<f32>, Vec<usize>)> {
        let refs: Vec<&Tensor<f32>> = indices.iter().map(|&i| &self.samples[i]).collect();
        Ok((stack_batch(&refs)?, indices.iter().map(|&i| self.labels[i]).collect()))
    }

    pub fn class_counts(&self, k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &l in &self.labels {
            if l < k {
                c[l] += 1;
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub seconds: f64,
}

impl EpochLog {
    /// Equality of everything except wall time.
    pub fn same_trajectory(a: &[EpochLog], b: &[EpochLog]) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| {
                x.epoch == y.epoch
                    && x.train_loss.to_bits() == y.train_loss.to_bits()
                    && x.val_loss.to_bits() == y.val_loss.to_bits()
                    && x.val_accuracy.to_bits() == y.val_accuracy.to_bits()
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Improved,
    Waiting(usize),
    Stop,
}

/// Patience counter on validation loss; only a strict decrease counts as improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_loss: f64,
    pub best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping { patience, best_loss: f64::INFINITY, best_epoch: 0, wait: 0 }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> Progress {
        if val_loss < self.best_loss {
            self.best_loss = val_loss;
            self.best_epoch = epoch;
            self.wait = 0;
            Progress::Improved
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                Progress::Stop
            } else {
                Progress::Waiting(self.wait)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRun {
    pub logs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Drives `step` for up to `max_epochs`, calling `on_best` after each
/// improving epoch and stopping once `patience` epochs pass without one.
pub fn run_epochs(
    max_epochs: usize,
    patience: usize,
    mut step: impl FnMut(usize) -> Result<EpochLog>,
    mut on_best: impl FnMut(&EpochLog) -> Result<()>,
) -> Result<TrainingRun> {
    let mut stopper = EarlyStopping::new(patience);
    let mut logs = Vec::new();
    let mut stopped_early = false;
    for epoch in 1..=max_epochs {
        let log = step(epoch)?;
        if !(log.train_loss.is_finite() && log.val_loss.is_finite()) || log.train_loss < 0.0 || log.val_loss < 0.0 {
            return Err(Error::Training(format!("epoch {epoch}: invalid losses {} / {}", log.train_loss, log.val_loss)));
        }
        let progress = stopper.observe(epoch, log.val_loss);
        if progress == Progress::Improved {
            on_best(&log)?;
        }
        logs.push(log);
        if progress == Progress::Stop {
            stopped_early = epoch < max_epochs;
            break;
        }
    }
    Ok(TrainingRun { logs, best_epoch: stopper.best_epoch, best_val_loss: stopper.best_loss, stopped_early })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub run: TrainingRun,
    pub best_checkpoint: Checkpoint,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

/// Stratified validation carve-out: each class gives `max(1, round(f·n))` of
/// its `n` units (recordings when group ids are present, else samples) to
/// validation and keeps at least one for training.
pub fn carve_validation(data: &Dataset, config: &TrainConfig, classes: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut units: Vec<BTreeMap<usize, Vec<usize>>> = vec![BTreeMap::new(); classes];
    for (i, &l) in data.labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::Data(format!("label {l} outside [0, {classes})")));
        }
        let key = data.groups.as_ref().map_or(i, |g| g[i]);
        units[l].entry(key).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (c, class_units) in units.into_iter().enumerate() {
        if class_units.len() < 2 {
            return Err(Error::Data(format!(
                "class {c} has {} unit(s); the validation carve-out would leave a side empty",
                class_units.len()
            )));
        }
        let mut list: Vec<Vec<usize>> = class_units.into_values().collect();
        list.shuffle(&mut rng);
        let n_val = ((config.val_fraction * list.len() as f64).round() as usize).clamp(1, list.len() - 1);
        for (k, members) in list.into_iter().enumerate() {
            if k < n_val { &mut val } else { &mut train }.extend(members);
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Mean loss and arg-max predictions over `indices`, in eval mode.
pub fn score(model: &mut ModelInstance, data: &Dataset, indices: &[usize], batch: usize) -> Result<(f64, Vec<usize>)> {
    let previous = model.mode();
    model.set_mode(Mode::Eval);
    let mut loss = 0.0;
    let mut preds = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(batch.max(1)) {
        let (x, y) = data.batch(chunk)?;
        let logits = model.logits(&x)?;
        let k = logits.shape()[1];
        for row in logits.data().chunks(k) {
            preds.push((0..k).fold(0, |b, j| if row[j] > row[b] { j } else { b }));
        }
        loss += model.loss_from_logits(logits, &y)? as f64 * chunk.len() as f64;
    }
    model.set_mode(previous);
    Ok((loss / indices.len().max(1) as f64, preds))
}

/// Trains with Adam and early stopping, then restores the best-validation weights.
pub fn train(model: &mut ModelInstance, data: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let classes = model.spec().num_classes;
    let (train_idx, val_idx) = carve_validation(data, config, classes)?;
    let adam = Adam::new(config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order = train_idx.clone();
    let mut best = model.checkpoint();
    let name = model.spec().name.clone();
    let cell = std::cell::RefCell::new(model);
    let run = run_epochs(
        config.epochs,
        config.patience,
        |epoch| {
            let started = Instant::now();
            let mut model = cell.borrow_mut();
            model.set_mode(Mode::Train);
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let (x, y) = data.batch(chunk)?;
                total += model.train_step(&x, &y, &adam)? as f64 * chunk.len() as f64;
            }
            let (val_loss, preds) = score(&mut model, data, &val_idx, 32)?;
            let correct = preds.iter().zip(&val_idx).filter(|(p, &i)| **p == data.labels[i]).count();
            let log = EpochLog {
                epoch,
                train_loss: total / order.len() as f64,
                val_loss,
                val_accuracy: correct as f64 / val_idx.len() as f64,
                seconds: started.elapsed().as_secs_f64(),
            };
            log::info!(
                "{name} epoch {epoch}: train {:.4} val {:.4} acc {:.3} ({:.1}s)",
                log.train_loss,
                log.val_loss,
                log.val_accuracy,
                log.seconds
            );
            Ok(log)
        },
        |_| {
            best = cell.borrow().checkpoint();
            Ok(())
        },
    )?;
    let model = cell.into_inner();
    model.load_checkpoint(&best)?;
    model.set_mode(Mode::Eval);
    Ok(TrainOutcome { run, best_checkpoint: best, train_indices: train_idx, val_indices: val_idx })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
    pub predictions: Vec<usize>,
}

pub fn class_names(k: usize) -> Vec<&'static str> {
    if k == GenreLabel::COUNT {
        GenreLabel::ALL.iter().map(|g| g.name()).collect()
    } else {
        const GENERIC: [&str; 16] =
            ["c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9", "c10", "c11", "c12", "c13", "c14", "c15"];
        GENERIC.iter().take(k).copied().collect()
    }
}

/// Scores `test` in eval mode.
pub fn evaluate(model: &mut ModelInstance, test: &Dataset) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Argument("test set is empty".into()));
    }
    let k = model.spec().num_classes;
    let idx: Vec<usize> = (0..test.len()).collect();
    let (_, predictions) = score(model, test, &idx, 32)?;
    let confusion = confusion_matrix(&test.labels, &predictions, k)?;
    let report = MetricsReport::from_confusion(&confusion, &class_names(k))?;
    Ok(Evaluation { confusion, report, predictions })
}
