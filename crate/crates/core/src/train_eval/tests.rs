use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::autodiff::Tensor;
use crate::models::{ArchitectureSpec, LayerSpec, ModelInstance};
use crate::Error;

fn log(epoch: usize, val_loss: f64) -> EpochLog {
    EpochLog { epoch, train_loss: 1.0, val_loss, val_accuracy: 0.5, seconds: 0.0 }
}

#[test]
fn constant_loss_stops_after_patience() {
    let run = run_epochs(50, 10, |e| Ok(log(e, 0.7)), |_| Ok(())).unwrap();
    assert_eq!(run.logs.len(), 11);
    assert_eq!(run.best_epoch, 1);
    assert!(run.stopped_early);
}

#[test]
fn decreasing_loss_runs_every_epoch() {
    let mut improvements = 0;
    let run = run_epochs(50, 10, |e| Ok(log(e, 1.0 / e as f64)), |_| {
        improvements += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(run.logs.len(), 50);
    assert_eq!(improvements, 50);
    assert!(!run.stopped_early);
}

#[test]
fn best_epoch_has_minimal_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let losses: Vec<f64> = (0..30).map(|_| rng.random_range(0.1..2.0)).collect();
        let mut snapshot = None;
        let run = run_epochs(30, 5, |e| Ok(log(e, losses[e - 1])), |l| {
            snapshot = Some(l.val_loss);
            Ok(())
        })
        .unwrap();
        let seen_min = run.logs.iter().map(|l| l.val_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(run.best_val_loss, seen_min);
        assert_eq!(snapshot, Some(seen_min));
        assert_eq!(run.logs[run.best_epoch - 1].val_loss, seen_min);
    }
    assert!(run_epochs(5, 2, |e| Ok(log(e, f64::NAN)), |_| Ok(())).is_err());
}

fn linear_spec() -> ArchitectureSpec {
    ArchitectureSpec {
        name: "linear".into(),
        num_classes: 5,
        layers: vec![LayerSpec::Flatten, LayerSpec::Dense { units: 5 }, LayerSpec::Softmax],
    }
}

fn toy_dataset(per_class: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for c in 0..5 {
        for _ in 0..per_class {
            samples.push(Tensor::from_fn(&[1, 1, 2, 4], |i| {
                let mean = if i == c { 4.0 } else { 0.0 };
                mean + rng.random_range(-0.3..0.3)
            }));
            labels.push(c);
        }
    }
    Dataset::new(samples, labels, None).unwrap()
}

#[test]
fn separable_toy_problem_is_learned() {
    let data = toy_dataset(20, 1);
    let mut model = ModelInstance::new(linear_spec(), [1, 2, 4], 3).unwrap();
    let config = TrainConfig { learning_rate: 1e-2, ..TrainConfig::with_seed(9) };
    let out = train(&mut model, &data, &config).unwrap();
    assert!(out.run.logs.len() <= 50);
    let eval = evaluate(&mut model, &data).unwrap();
    assert_eq!(eval.report.accuracy, 1.0);
    assert!(out.run.logs.iter().all(|l| l.val_loss >= out.run.best_val_loss));
}

#[test]
fn same_seed_gives_identical_logs_and_metrics() {
    let data = toy_dataset(8, 2);
    let run = || {
        let mut model = ModelInstance::new(linear_spec(), [1, 2, 4], 5).unwrap();
        let config = TrainConfig { epochs: 6, ..TrainConfig::with_seed(17) };
        let out = train(&mut model, &data, &config).unwrap();
        (out.run.logs, evaluate(&mut model, &data).unwrap().report, out.best_checkpoint.to_bytes())
    };
    let (a, ra, ca) = run();
    let (b, rb, cb) = run();
    assert!(EpochLog::same_trajectory(&a, &b));
    assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());
    assert_eq!(ca, cb);
}

#[test]
fn carve_out_errors_and_config_validation() {
    let mut data = toy_dataset(1, 3);
    let mut model = ModelInstance::new(linear_spec(), [1, 2, 4], 5).unwrap();
    assert!(matches!(train(&mut model, &data, &TrainConfig::default()), Err(Error::Data(_))));
    data.samples.clear();
    data.labels.clear();
    assert!(matches!(train(&mut model, &data, &TrainConfig::default()), Err(Error::Data(_))));
    let bad = TrainConfig { val_fraction: 0.5, ..TrainConfig::default() };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
}

#[test]
fn group_aware_carve_keeps_recordings_together() {
    let mut data = toy_dataset(10, 4);
    data.groups = Some((0..50).map(|i| i / 5).collect());
    let (train, val) = carve_validation(&data, &TrainConfig::with_seed(1), 5).unwrap();
    let groups = data.groups.as_ref().unwrap();
    for &v in &val {
        assert!(train.iter().all(|&t| groups[t] != groups[v]));
    }
    assert_eq!(train.len() + val.len(), 50);
}
