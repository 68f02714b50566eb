//! Layer shapes and parameter counts of every architecture for every feature
//! geometry, plus YMCM's serialized description.

use ymir::features::FeatureKind;
use ymir::models::{input_geometry, ArchitectureKind};

fn main() -> ymir::Result<()> {
    for arch in ArchitectureKind::ALL {
        let spec = arch.build();
        print!("{:<15}", arch.display_name());
        for kind in FeatureKind::ALL {
            let cols = if kind == FeatureKind::Filterbank { 599 } else { 259 };
            let count = spec.parameter_count(input_geometry(kind, cols))?;
            print!(" {}={count}", kind.id());
        }
        println!();
    }

    let ymcm = ArchitectureKind::Ymcm.build();
    println!("\nYMCM on a 128 x 259 mel-spectrogram:");
    for s in ymcm.infer_shapes(input_geometry(FeatureKind::Melspec, 259))? {
        println!("  {:<10} {:?}", s.layer, s.shape);
    }
    println!("\n{}", ymcm.to_json());
    Ok(())
}
