//! Cuts one synthetic clip into segments and extracts all six feature kinds
//! from the first segment, sharing a single power spectrogram.

use ymir::corpus::{default_recipes, render_clip, segment, AudioClip, SEGMENTS_PER_CLIP, SEGMENT_SECONDS, TARGET_RATE};
use ymir::features::{FeatureExtractor, FeatureKind};

fn main() -> ymir::Result<()> {
    let recipe = &default_recipes()[2];
    let clip = AudioClip::new(render_clip(recipe, 9), TARGET_RATE)?;
    let segments = segment(&clip, SEGMENTS_PER_CLIP, SEGMENT_SECONDS)?;
    println!("{} clip of {:.1} s -> {} segments", recipe.genre.name(), clip.duration_seconds(), segments.len());

    let extractor = FeatureExtractor::default();
    println!("extraction parameters: {}\n", extractor.fingerprint());
    let maps = extractor.extract_many(&FeatureKind::ALL, &segments[0])?;
    for m in &maps {
        let (lo, hi) = m.values.iter().fold((f32::MAX, f32::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        println!(
            "{:<16} {:>3} x {:<3} hop {:>5.1} ms  range [{lo:>8.2}, {hi:>8.2}]",
            m.kind.display_name(),
            m.rows,
            m.cols,
            1000.0 * m.frame_seconds
        );
    }
    let chroma = &maps[0];
    let energy: Vec<f32> = (0..chroma.rows).map(|r| chroma.row(r).iter().sum()).collect();
    let top = (0..12).max_by(|&a, &b| energy[a].total_cmp(&energy[b])).unwrap();
    println!("\ndominant pitch class: {}", chroma.bin_labels()[top]);
    Ok(())
}
