mod common;

use cikics::assign::{self, FinderReference};
use cikics::pipeline::{self, PipelineConfig};
use cikics::{AblationMode, Source};
use ndarray::array;
use std::collections::HashSet;

#[test]
fn finder_reference_values() {
    let s = assign::distance_scores(&[1.0, 3.0]);
    assert!((s[0] - 0.731).abs() < 1e-3 && (s[1] - 0.269).abs() < 1e-3);
    let e = (-0.5f64).exp() / ((-0.5f64).exp() + (-1.5f64).exp());
    assert!((s[0] - e).abs() < 1e-15);

    let v = array![[0.0, 0.0], [0.0, 0.0], [9.0, 9.0], [9.0, 8.0]];
    let near: &[usize] = &[0, 1];
    let far: &[usize] = &[2, 3];
    let s = assign::finder_scores(&v, &[0.0, 0.0], &[near, far], FinderReference::Members).unwrap();
    assert!(s[0] > s[1]);
    let empty: &[usize] = &[];
    assert!(
        assign::finder_scores(&v, &[0.0, 0.0], &[near, empty], FinderReference::Members).is_err()
    );
}

#[test]
fn fusion_is_mean_and_shift_invariant() {
    let (avg, chosen) = assign::fuse(&[0.9, 0.1], &[0.7, 0.3], &[0, 1]);
    assert!((avg[0] - 0.8).abs() < 1e-15 && (avg[1] - 0.2).abs() < 1e-15);
    assert_eq!(chosen, 0);
    let (_, shifted) = assign::fuse(&[1.9, 1.1], &[1.7, 1.3], &[0, 1]);
    assert_eq!(shifted, chosen);
    // Exact tie goes to the lower class index.
    let (_, tie) = assign::fuse(&[0.5, 0.5], &[0.5, 0.5], &[4, 2]);
    assert_eq!(tie, 1);
}

#[test]
fn every_mode_covers_all_ids_once() {
    let set = common::overlapping_mixture_sized(25, 4);
    let config = PipelineConfig {
        clusters: 8,
        seed: 4,
        tsne: cikics::tsne::TsneConfig {
            iterations: 300,
            ..Default::default()
        },
        ..Default::default()
    };
    let ids: HashSet<String> = set.ids().iter().cloned().collect();
    let runs = pipeline::run_ablation(set, &config).unwrap();
    let normal_of = |a: &cikics::Assignment| -> Vec<(String, usize)> {
        a.records
            .iter()
            .filter(|r| r.source == Source::Normal)
            .map(|r| (r.id.clone(), r.cluster_index))
            .collect()
    };
    let reference = normal_of(&runs[0].1);
    for (mode, a, _) in &runs {
        let seen: HashSet<String> = a.records.iter().map(|r| r.id.clone()).collect();
        assert_eq!(seen, ids, "{mode}");
        assert_eq!(a.records.len(), ids.len());
        assert_eq!(normal_of(a), reference);
        for row in &a.rows {
            for c in &row.candidates {
                assert!((c.s_avg - (c.s_finder + c.s_siamese) / 2.0).abs() < 1e-15);
            }
        }
    }
    assert_eq!(
        runs.iter().map(|r| r.0).collect::<Vec<_>>(),
        AblationMode::ALL.to_vec()
    );
}
