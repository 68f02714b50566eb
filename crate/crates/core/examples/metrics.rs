//! Confusion matrix and weighted one-vs-rest metrics for a labelled toy run.

use ymir::train_eval::{class_names, confusion_matrix, MetricsReport};

fn main() -> ymir::Result<()> {
    let truth = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 4, 4, 4, 4];
    let pred = [0, 0, 1, 0, 1, 1, 2, 2, 2, 2, 3, 0, 4, 4, 3, 4];
    let cm = confusion_matrix(&truth, &pred, 5)?;
    let names = class_names(5);
    print!("{}", cm.to_text(&names));
    let report = MetricsReport::from_confusion(&cm, &names)?;
    println!(
        "\naccuracy {:.4}  balanced {:.4}  precision {:.4}  recall {:.4}  F1 {:.4}  specificity {:.4}",
        report.accuracy,
        report.balanced_accuracy,
        report.weighted_precision,
        report.weighted_recall,
        report.weighted_f1,
        report.weighted_specificity
    );
    for c in &report.per_class {
        println!(
            "  {:<9} support {:>2}  P {:.3}  R {:.3}  F1 {:.3}  spec {:.3}",
            c.class, c.support, c.precision, c.recall, c.f1, c.specificity
        );
    }
    Ok(())
}
