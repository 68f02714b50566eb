//! Generates a small synthetic five-genre corpus and reads it back.
//!
//! ```text
//! cargo run --release --example synth_corpus -- /tmp/ymir-corpus 8
//! ```

use ymir::corpus::{default_recipes, generate_synthetic_corpus, parse_label, GenreLabel, Manifest};

fn main() -> ymir::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| std::env::temp_dir().join("ymir-corpus").display().to_string());
    let clips: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);

    for r in default_recipes() {
        println!("{:<9} {:?}", r.genre.name(), r);
    }
    generate_synthetic_corpus(&default_recipes(), clips, 42, &out)?;
    let manifest = Manifest::load(&out)?;
    println!("\n{} recordings under {out}", manifest.len());
    for (genre, n) in GenreLabel::ALL.iter().zip(manifest.class_counts()) {
        println!("  {:<9} {n}", genre.name());
    }
    let first = &manifest.records[0];
    let name = first.file_path.rsplit('/').next().unwrap_or_default();
    println!("\nfirst file {name}\n  parsed as {:?}", parse_label(name)?);
    Ok(())
}
