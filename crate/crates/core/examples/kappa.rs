//! Fleiss' kappa on two small annotation matrices, and on a file when one
//! is given (rows of per-category rater counts).

use ymir::corpus::{AnnotationMatrix, KappaBreakdown};

fn show(name: &str, m: &AnnotationMatrix) -> ymir::Result<()> {
    let k = KappaBreakdown::compute(m)?;
    println!(
        "{name:<12} {} items, {} raters, {} categories: P_o {:.4}  P_e {:.4}  kappa {:.4}",
        m.items(),
        m.raters(),
        m.categories(),
        k.observed_agreement,
        k.expected_agreement,
        k.kappa
    );
    Ok(())
}

fn main() -> ymir::Result<()> {
    show("split votes", &AnnotationMatrix::new(&[vec![1, 1], vec![1, 1]])?)?;
    show("mixed", &AnnotationMatrix::parse("2 0 0\n0 2 0\n1 1 0\n0 1 1\n")?)?;
    if let Some(path) = std::env::args().nth(1) {
        show(&path, &AnnotationMatrix::parse(&std::fs::read_to_string(&path)?)?)?;
    }
    Ok(())
}
