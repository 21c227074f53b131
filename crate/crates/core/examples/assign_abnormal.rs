//! Assigns the abnormal cluster and prints the candidate scores of a few
//! samples.

use cikics::pipeline::{self, PipelineConfig};
use cikics::synth::Mixture;

fn main() -> cikics::Result<()> {
    let set = Mixture::balanced(8, 60, 64, 6.5, 1.0, 9)
        .with_stretch(8.0)
        .generate();
    let config = PipelineConfig {
        clusters: 8,
        seed: 9,
        ..Default::default()
    };
    let outcome = pipeline::run_on_set(set, &config)?;
    println!(
        "{} abnormal samples assigned",
        outcome.assignment.rows.len()
    );
    for row in outcome.assignment.rows.iter().take(3) {
        println!("{} -> {}", row.id, row.chosen);
        for c in &row.candidates {
            println!(
                "    {:<4} p={:.3} finder={:.3} twin={:.3} avg={:.3}",
                c.pseudo_label, c.probability, c.s_finder, c.s_siamese, c.s_avg
            );
        }
    }
    if let Some(m) = outcome.metrics {
        println!(
            "pairwise F1 {:.3}, NMI {:.3}, AveAcc {:.3}",
            m.f1, m.nmi, m.ave_acc
        );
    }
    Ok(())
}
