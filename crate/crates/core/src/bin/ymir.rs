use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ymir::corpus::{default_recipes, generate_synthetic_corpus, AnnotationMatrix, KappaBreakdown, SplitMode};
use ymir::experiment::{
    extract_features, report_from_dir, run_grid, run_single, table2_text, table3_text, CorpusSource,
    ExperimentConfig, FeatureStore, Stage, StageError,
};
use ymir::Error;

#[derive(Parser)]
#[command(name = "ymir", version, about = "Music-genre classification benchmark engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic five-genre corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        clips_per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract feature sets into the cache.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated feature kinds, or `all`.
        #[arg(long, default_value = "all")]
        features: String,
        #[arg(long)]
        cache: PathBuf,
    },
    /// Train and evaluate one architecture on one feature kind.
    Train {
        #[arg(long)]
        feature: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run every feature x architecture cell.
    Grid {
        /// Comma-separated feature kinds, or `all`.
        #[arg(long)]
        features: Option<String>,
        /// Comma-separated architectures, or `all`.
        #[arg(long)]
        models: Option<String>,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rebuild tables and plots from an output directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Fleiss' kappa of an annotation matrix file (items x categories counts).
    Kappa { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory. With --synthetic-clips it is generated when absent.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    synthetic_clips: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, required = true)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    val_fraction: Option<f64>,
    /// `track` or `segment`.
    #[arg(long)]
    split: Option<SplitMode>,
    #[arg(long)]
    train_ratio: Option<f64>,
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
}

fn config_error(e: Error) -> StageError {
    StageError { stage: Stage::Config, error: e }
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig, StageError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(config_error)?,
            None => {
                let corpus = self
                    .corpus
                    .clone()
                    .ok_or_else(|| config_error(Error::Config("either --config or --corpus is required".into())))?;
                let out = self.out.clone().unwrap_or_else(|| PathBuf::from("ymir-out"));
                ExperimentConfig::grid(CorpusSource::Directory { path: corpus }, out, self.seed)
            }
        };
        if let Some(path) = self.corpus {
            config.corpus = CorpusSource::Directory { path };
        }
        if let Some(clips) = self.synthetic_clips {
            let path = config.corpus.root().to_path_buf();
            config.corpus = CorpusSource::Synthetic { path, clips_per_class: clips, seed: self.seed };
        }
        if let Some(out) = self.out {
            config.output_dir = out;
        }
        if self.cache.is_some() {
            config.cache_dir = self.cache;
        }
        config.seed = self.seed;
        config.train.seed = self.seed;
        let t = &mut config.train;
        t.epochs = self.epochs.unwrap_or(t.epochs);
        t.batch_size = self.batch_size.unwrap_or(t.batch_size);
        t.learning_rate = self.learning_rate.unwrap_or(t.learning_rate);
        t.patience = self.patience.unwrap_or(t.patience);
        t.val_fraction = self.val_fraction.unwrap_or(t.val_fraction);
        config.split_mode = self.split.unwrap_or(config.split_mode);
        config.train_ratio = self.train_ratio.unwrap_or(config.train_ratio);
        Ok(config)
    }
}

fn expand(s: &str) -> Vec<String> {
    if s.eq_ignore_ascii_case("all") {
        Vec::new()
    } else {
        list(s)
    }
}

fn run(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Synth { out, clips_per_class, seed } => {
            let manifest = generate_synthetic_corpus(&default_recipes(), clips_per_class, seed, &out)
                .map_err(|error| StageError { stage: Stage::Corpus, error })?;
            println!("wrote {} recordings to {}", manifest.len(), out.display());
        }
        Command::Extract { corpus, features, cache } => {
            let mut config = ExperimentConfig::grid(CorpusSource::Directory { path: corpus }, &cache, 0);
            let chosen = expand(&features);
            if !chosen.is_empty() {
                config.features = chosen;
            }
            let store = FeatureStore::new(&cache);
            let (index, maps, report) = extract_features(&config, &store)?;
            for (kind, set) in &maps {
                let m = &set[0];
                println!("{:<16} {} maps of {} x {}", kind.display_name(), set.len(), m.rows, m.cols);
            }
            if let Some(r) = report {
                println!(
                    "{} recordings ({} padded, {} truncated), {} segments",
                    r.clips, r.padded_clips, r.truncated_clips, r.actual_segments
                );
            }
            println!("corpus {}: cache {} hit / {} miss", &index.hash[..12], store.hits(), store.misses());
        }
        Command::Train { feature, model, run } => {
            let mut config = run.into_config()?;
            if let Some(f) = feature {
                config.features = vec![f];
            }
            if let Some(m) = model {
                config.architectures = vec![m];
            }
            if config.features.len() > 1 {
                config.features = vec!["melspec".into()];
            }
            if config.architectures.len() > 1 {
                config.architectures = vec!["ymcm".into()];
            }
            let cell = run_single(&config)?;
            let m = &cell.summary.metrics;
            println!(
                "{} + {}: accuracy {:.2}%, precision {:.2}%, recall {:.2}%, F1 {:.2}% after {} epochs",
                cell.summary.architecture.display_name(),
                cell.summary.feature.display_name(),
                100.0 * m.accuracy,
                100.0 * m.weighted_precision,
                100.0 * m.weighted_recall,
                100.0 * m.weighted_f1,
                cell.summary.epochs_run
            );
            println!("artifacts in {}", cell.dir.display());
        }
        Command::Grid { features, models, jobs, run } => {
            let mut config = run.into_config()?;
            if let Some(f) = features.filter(|f| !expand(f).is_empty()) {
                config.features = list(&f);
            }
            if let Some(m) = models.filter(|m| !expand(m).is_empty()) {
                config.architectures = list(&m);
            }
            if let Some(j) = jobs {
                config.jobs = j;
            }
            let grid = run_grid(&config)?;
            print!("{}\n{}", table2_text(&grid.cells), table3_text(&grid.cells));
            println!(
                "{} cells, {} failed, {:.1} s; feature cache {} hit / {} miss",
                grid.cells.len(),
                grid.failures().count(),
                grid.wall_seconds,
                grid.cache_hits,
                grid.cache_misses
            );
            let failure = grid.failures().find_map(|c| c.error.clone());
            if let Some(e) = failure {
                return Err(e.into_stage_error());
            }
        }
        Command::Report { dir } => {
            let cells = report_from_dir(&dir).map_err(|error| StageError { stage: Stage::Artifacts, error })?;
            print!("{}\n{}", table2_text(&cells), table3_text(&cells));
        }
        Command::Kappa { file } => {
            let read = || -> ymir::Result<KappaBreakdown> {
                if !file.exists() {
                    return Err(Error::MissingFile(file.clone()));
                }
                KappaBreakdown::compute(&AnnotationMatrix::parse(&std::fs::read_to_string(&file)?)?)
            };
            let k = read().map_err(|error| StageError { stage: Stage::Corpus, error })?;
            println!("observed agreement {:.6}", k.observed_agreement);
            println!("expected agreement {:.6}", k.expected_agreement);
            println!("kappa {:.6}", k.kappa);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
