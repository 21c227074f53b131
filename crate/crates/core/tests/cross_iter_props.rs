mod common;

use cikics::cross_iter::{self, StopReason};
use cikics::kernel;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn blob_layout(centers: usize, per: usize, spread: f64, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Array2::zeros((centers * per, 2));
    for c in 0..centers {
        let (cx, cy) = (rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
        for p in 0..per {
            let zx: f64 = StandardNormal.sample(&mut rng);
            let zy: f64 = StandardNormal.sample(&mut rng);
            pts[[c * per + p, 0]] = cx + spread * zx;
            pts[[c * per + p, 1]] = cy + spread * zy;
        }
    }
    pts
}

fn kernel_for(pts: &Array2<f64>, k: usize, beta: usize) -> kernel::KernelMatrix {
    let median = kernel::median_pairwise_sq_dist(pts).unwrap();
    let sigma = kernel::compute_sigma(median, k, pts.nrows(), beta)
        .unwrap()
        .sigma;
    kernel::rbf_kernel_matrix(pts, sigma).unwrap()
}

fn assert_partition(state: &cikics::ClusterState, n: usize) {
    let mut seen = vec![0u8; n];
    for g in &state.normal_pool {
        for &i in g {
            seen[i] += 1;
        }
    }
    for &i in &state.abnormal {
        seen[i] += 1;
    }
    assert!(seen.iter().all(|&c| c == 1));
}

#[test]
fn full_pool_size_without_early_stop() {
    let pts = blob_layout(5, 100, 2.0, 11);
    let state = cross_iter::cross_iterative_cluster(&kernel_for(&pts, 5, 3), 5, 3, 1).unwrap();
    assert_eq!(state.stop, StopReason::Completed);
    assert_eq!(state.h(), 12);
    assert_partition(&state, 500);
}

#[test]
fn abnormal_is_a_largest_cluster_each_round() {
    let pts = blob_layout(6, 60, 3.0, 2);
    let state = cross_iter::cross_iterative_cluster(&kernel_for(&pts, 6, 3), 6, 3, 9).unwrap();
    for t in &state.trace {
        let max = *t.cluster_sizes.iter().max().unwrap();
        assert_eq!(t.cluster_sizes[t.abnormal_cluster], max);
        assert_eq!(t.abnormal_size, max);
        let first = t.cluster_sizes.iter().position(|&s| s == max).unwrap();
        assert_eq!(t.abnormal_cluster, first);
    }
}

#[test]
fn merging_conserves_members() {
    let pts = blob_layout(4, 80, 2.0, 5);
    let state = cross_iter::cross_iterative_cluster(&kernel_for(&pts, 8, 3), 8, 3, 3).unwrap();
    let normal = state.normal_count();
    let merged = cross_iter::merge_normal_clusters(state, &pts, 4, 5, 3).unwrap();
    assert_eq!(merged.merged.iter().map(Vec::len).sum::<usize>(), normal);
    assert_eq!(merged.merge_map.len(), merged.h());
    assert_partition(&merged, 320);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn partition_holds(seed in any::<u64>(), n in 40usize..160, k in 2usize..8, beta in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = Array2::from_shape_fn((n, 2), |_| rng.random_range(-10.0..10.0));
        let state = cross_iter::cross_iterative_cluster(&kernel_for(&pts, k, beta), k, beta, seed).unwrap();
        let total: usize = state.normal_pool.iter().map(Vec::len).sum::<usize>() + state.abnormal.len();
        prop_assert_eq!(total, n);
        prop_assert!(state.h() <= (k - 1) * beta);
        assert_partition(&state, n);
    }
}
