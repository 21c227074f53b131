//! Evaluation metrics on small hand-checkable labelings.

use cikics::metrics;

fn main() -> cikics::Result<()> {
    let truth = ["a", "a", "b", "b"];
    let all_one = [0, 0, 0, 0];
    let s = metrics::pairwise_prf(&all_one, &truth)?;
    println!(
        "one cluster: P={:.3} R={:.3} F1={:.3}",
        s.precision, s.recall, s.f1
    );

    let crossed = [0, 1, 0, 1];
    println!(
        "independent split: NMI={:.3}",
        metrics::nmi(&crossed, &truth)?
    );

    let pred = [0, 0, 0, 1, 1, 1];
    let truth = ["a", "a", "b", "b", "b", "a"];
    println!("purity={:.3}", metrics::purity(&pred, &truth)?);

    let report = metrics::evaluate(&[0, 0, 0, 0, 1, 1], &["a", "a", "a", "b", "c", "c"])?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}
