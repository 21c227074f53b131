//! Trains the classifier and the twin scorer, reports top-μ hit rates and
//! stores both checkpoints.

use cikics::neural::{self, ClassifierConfig, FeedForwardNet, LabeledData, TwinConfig};
use cikics::synth::Mixture;

fn main() -> cikics::Result<()> {
    let all = Mixture::balanced(6, 120, 32, 4.0, 1.0, 2).generate();
    let n = all.len();
    let train_idx: Vec<usize> = (0..n).filter(|i| i % 4 != 0).collect();
    let test_idx: Vec<usize> = (0..n).filter(|i| i % 4 == 0).collect();
    let train = LabeledData::from_set(&all.subset(&train_idx)?)?;
    let test = all.subset(&test_idx)?;

    let classifier = neural::train_classifier(&train, &ClassifierConfig::default())?;
    println!(
        "classifier loss {:.4} -> {:.4}",
        classifier.loss_trace[0],
        classifier.loss_trace.last().unwrap()
    );
    let x = test.to_f64();
    let truth = test.labels().unwrap();
    for mu in 1..=4 {
        let mut hits = 0;
        for (row, label) in x.outer_iter().zip(truth) {
            let top = classifier.predict_top_mu(row.as_slice().unwrap(), mu)?;
            hits += top.candidates.iter().any(|c| &c.label == label) as usize;
        }
        println!(
            "top-{mu} hit rate on held-out data: {:.3}",
            hits as f64 / test.len() as f64
        );
    }

    let twin = neural::train_siamese(&train, &TwinConfig::default())?;
    let a = x.row(0).to_vec();
    let same = (1..test.len()).find(|&j| truth[j] == truth[0]).unwrap();
    let diff = (1..test.len()).find(|&j| truth[j] != truth[0]).unwrap();
    println!(
        "twin score: same class {:.3}, different class {:.3}",
        twin.twin_score(&a, x.row(same).as_slice().unwrap())?,
        twin.twin_score(&a, x.row(diff).as_slice().unwrap())?
    );

    classifier.save("classifier.ckpt")?;
    twin.save("twin.ckpt")?;
    let reloaded = FeedForwardNet::load("classifier.ckpt")?;
    println!(
        "reloaded classifier with layers {:?}",
        reloaded.layer_dims()
    );
    Ok(())
}
