//! Perplexity calibration and a 2-D t-SNE layout.

use cikics::dataset;
use cikics::synth::Mixture;
use cikics::tsne::{self, TsneConfig};

fn main() -> cikics::Result<()> {
    let set = Mixture::balanced(4, 50, 32, 8.0, 1.0, 3).generate();
    let config = TsneConfig {
        seed: 7,
        ..Default::default()
    };
    let perplexity = config.effective_perplexity(set.len());
    let affinities = tsne::compute_affinities(&set, perplexity)?;
    let mean_entropy = affinities.entropies.iter().sum::<f64>() / set.len() as f64;
    println!(
        "perplexity {perplexity}: mean entropy {mean_entropy:.4} bits (target {:.4}), sum(P) = {:.6}",
        perplexity.log2(),
        affinities.p.sum()
    );

    let layout = tsne::run_tsne(&affinities, &config)?;
    let kl = &layout.kl_trace;
    for t in [0, 100, 250, 500, kl.len() - 1] {
        println!("KL after {t:4} updates: {:.4}", kl[t]);
    }
    dataset::save_layout(set.ids(), &layout.points, "layout.csv")?;
    println!("layout written to layout.csv");
    Ok(())
}
