//! Layout-compatible stand-in corpus: five classes of 30 s tonal signals,
//! each class with its own fundamental band, harmonic profile, amplitude
//! modulation rate and noise floor.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{format_label, write_wav_pcm16, GenreLabel, LabelFields, Manifest, TrackRecord, CLIP_SECONDS, TARGET_RATE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SignalRecipe {
    pub genre: GenreLabel,
    /// Fundamentals are drawn log-uniformly from this band, one per note.
    pub f0_low: f64,
    pub f0_high: f64,
    pub harmonics: usize,
    /// Amplitude ratio between consecutive harmonics.
    pub harmonic_decay: f64,
    pub am_rate_hz: f64,
    pub am_depth: f64,
    pub noise_floor: f64,
    pub note_seconds: f64,
}

/// Octave-disjoint fundamental bands, one per genre.
pub fn default_recipes() -> Vec<SignalRecipe> {
    let table = [
        (GenreLabel::Sanaani, 100.0, 160.0, 6, 0.75, 1.5, 0.5, 0.010, 0.50),
        (GenreLabel::Hadhrami, 200.0, 320.0, 5, 0.70, 3.0, 0.6, 0.015, 0.40),
        (GenreLabel::Lahji, 400.0, 640.0, 4, 0.60, 5.0, 0.4, 0.020, 0.30),
        (GenreLabel::Tihami, 800.0, 1280.0, 3, 0.50, 7.0, 0.7, 0.030, 0.25),
        (GenreLabel::Adeni, 1600.0, 2560.0, 2, 0.40, 0.8, 0.3, 0.050, 0.60),
    ];
    table
        .into_iter()
        .map(|(genre, lo, hi, h, decay, am, depth, noise, note)| SignalRecipe {
            genre,
            f0_low: lo,
            f0_high: hi,
            harmonics: h,
            harmonic_decay: decay,
            am_rate_hz: am,
            am_depth: depth,
            noise_floor: noise,
            note_seconds: note,
        })
        .collect()
}

fn validate(recipes: &[SignalRecipe]) -> Result<()> {
    if recipes.len() != GenreLabel::COUNT {
        return Err(Error::Argument(format!("need {} recipes, got {}", GenreLabel::COUNT, recipes.len())));
    }
    for g in GenreLabel::ALL {
        if recipes.iter().filter(|r| r.genre == g).count() != 1 {
            return Err(Error::Argument(format!("genre {g} needs exactly one recipe")));
        }
    }
    for r in recipes {
        let nyquist = TARGET_RATE as f64 / 2.0;
        if !(r.f0_low > 0.0 && r.f0_low <= r.f0_high && r.f0_high < nyquist) {
            return Err(Error::Argument(format!("{}: bad fundamental band", r.genre)));
        }
        if r.harmonics == 0 || !(r.note_seconds > 0.0) || !(0.0..=1.0).contains(&r.am_depth) || r.noise_floor < 0.0 {
            return Err(Error::Argument(format!("{}: invalid recipe parameters", r.genre)));
        }
    }
    Ok(())
}

fn clip_seed(seed: u64, genre: GenreLabel, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((genre.id() as u64) << 40) ^ index as u64
}

/// Renders one 30 s clip at the working rate.
pub fn render_clip(recipe: &SignalRecipe, seed: u64) -> Vec<f32> {
    let sr = TARGET_RATE as f64;
    let len = (CLIP_SECONDS * sr) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gain = rng.random_range(0.3..0.6);
    let am_phase = rng.random_range(0.0..TAU);
    let note_len = ((recipe.note_seconds * sr) as usize).max(1);
    let amps: Vec<f64> = (0..recipe.harmonics).map(|h| recipe.harmonic_decay.powi(h as i32)).collect();
    let norm: f64 = amps.iter().sum::<f64>() + recipe.noise_floor;
    let (log_lo, log_hi) = (recipe.f0_low.ln(), recipe.f0_high.ln());

    let mut phase = 0.0f64;
    let mut f0 = 0.0;
    let mut out = Vec::with_capacity(len);
    for n in 0..len {
        if n % note_len == 0 {
            f0 = if log_hi > log_lo { rng.random_range(log_lo..log_hi).exp() } else { recipe.f0_low };
        }
        phase = (phase + TAU * f0 / sr) % TAU;
        let mut tone = 0.0;
        for (h, a) in amps.iter().enumerate() {
            if f0 * (h + 1) as f64 >= sr / 2.0 {
                break;
            }
            tone += a * (phase * (h + 1) as f64).sin();
        }
        let t = n as f64 / sr;
        let envelope = 1.0 - recipe.am_depth * (0.5 - 0.5 * (TAU * recipe.am_rate_hz * t + am_phase).cos());
        let noise = recipe.noise_floor * rng.random_range(-1.0..1.0);
        out.push((gain * (tone * envelope + noise) / norm) as f32);
    }
    out
}

/// Writes `clips_per_class` WAV files per genre under `<out_dir>/<Genre>/`
/// plus `manifest.csv`, deterministically for a given seed.
pub fn generate_synthetic_corpus(
    recipes: &[SignalRecipe],
    clips_per_class: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    validate(recipes)?;
    if clips_per_class == 0 {
        return Err(Error::Argument("clips_per_class must be positive".into()));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    for g in GenreLabel::ALL {
        std::fs::create_dir_all(out_dir.join(g.name()))?;
    }

    let mut jobs = Vec::new();
    for g in GenreLabel::ALL {
        let recipe = recipes.iter().find(|r| r.genre == g).expect("validated");
        for c in 0..clips_per_class {
            let fields = LabelFields {
                song_number: (g.id() * clips_per_class + c + 1) as u32,
                sample_number: 1,
                title: format!("Synthetic{c:04}"),
                artist: format!("{}Ensemble", g.name()),
                genre: g,
            };
            let rel = format!("{}/{}", g.name(), format_label(&fields));
            jobs.push((recipe, fields, rel, clip_seed(seed, g, c)));
        }
    }
    jobs.par_iter()
        .try_for_each(|(recipe, _, rel, s)| write_wav_pcm16(out_dir.join(rel), &render_clip(recipe, *s), TARGET_RATE))?;

    let records = jobs
        .into_iter()
        .map(|(_, f, rel, _)| TrackRecord {
            song_number: f.song_number,
            sample_number: f.sample_number,
            title: f.title,
            artist: f.artist,
            genre: f.genre,
            file_path: rel,
        })
        .collect();
    let manifest = Manifest::new(records, out_dir)?;
    manifest.write()?;
    Ok(manifest)
}
