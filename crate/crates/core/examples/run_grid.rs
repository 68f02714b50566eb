//! Runs a feature x architecture grid on a synthetic corpus and prints both
//! summary tables. The default is a reduced grid that finishes quickly;
//! pass `full` for all 30 cells.
//!
//! ```text
//! cargo run --release --example run_grid -- [full] [clips_per_class] [epochs]
//! ```

use ymir::experiment::{run_grid, table2_text, table3_text, CorpusSource, ExperimentConfig};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let full = args.first().map(String::as_str) == Some("full");
    let rest = &args[usize::from(full)..];
    let clips: usize = rest.first().and_then(|s| s.parse().ok()).unwrap_or(6);
    let epochs: usize = rest.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);

    let root = std::env::temp_dir().join("ymir-grid-example");
    let corpus = CorpusSource::Synthetic { path: root.join(format!("corpus-{clips}")), clips_per_class: clips, seed: 3 };
    let mut config = ExperimentConfig::grid(corpus, root.join("out"), 11);
    config.train.epochs = epochs;
    if !full {
        config.features = vec!["chroma".into(), "mfcc13".into(), "mfcc40".into()];
        config.architectures = vec!["mobilenet".into(), "cnn".into(), "ymcm".into()];
    }

    match run_grid(&config) {
        Ok(grid) => {
            println!("{}", table2_text(&grid.cells));
            println!("{}", table3_text(&grid.cells));
            println!(
                "{:.1} s total; feature cache {} hit / {} miss; tables and plots in {}",
                grid.wall_seconds,
                grid.cache_hits,
                grid.cache_misses,
                config.output_dir.display()
            );
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
