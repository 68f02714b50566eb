//! Trains YMCM on mel-spectrograms of a synthetic corpus and prints the
//! epoch log and test metrics. Artifacts land in the output directory.
//!
//! ```text
//! cargo run --release --example train_ymcm -- [clips_per_class] [epochs]
//! ```

use ymir::experiment::{run_single, CorpusSource, ExperimentConfig};
use ymir::features::FeatureKind;
use ymir::models::ArchitectureKind;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let clips: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(15);

    let root = std::env::temp_dir().join("ymir-train-example");
    let corpus = CorpusSource::Synthetic { path: root.join(format!("corpus-{clips}")), clips_per_class: clips, seed: 1 };
    let mut config = ExperimentConfig::single(corpus, FeatureKind::Melspec, ArchitectureKind::Ymcm, root.join("out"), 2024);
    config.train.epochs = epochs;

    match run_single(&config) {
        Ok(cell) => {
            for l in &cell.logs {
                println!(
                    "epoch {:>2}  train {:.4}  val {:.4}  val acc {:.3}  {:.1} s",
                    l.epoch, l.train_loss, l.val_loss, l.val_accuracy, l.seconds
                );
            }
            let m = &cell.summary.metrics;
            println!(
                "\nbest epoch {}; test accuracy {:.2}%, weighted F1 {:.2}% on {} segments",
                cell.summary.best_epoch,
                100.0 * m.accuracy,
                100.0 * m.weighted_f1,
                m.samples
            );
            println!("artifacts: {}", cell.dir.display());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
