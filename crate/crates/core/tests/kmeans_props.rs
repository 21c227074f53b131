mod common;

use cikics::{kernel, kmeans, metrics};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Array2::zeros((centers.len() * per, 2));
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for p in 0..per {
            for d in 0..2 {
                let z: f64 = StandardNormal.sample(&mut rng);
                data[[c * per + p, d]] = center[d] + spread * z;
            }
            labels.push(c);
        }
    }
    (data, labels)
}

#[test]
fn inertia_never_increases() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(20..120);
        let d = rng.random_range(1..6);
        let k = rng.random_range(2..8);
        let data = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let a = kmeans::kmeans(&data, k, seed).unwrap();
        for w in a.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "seed {seed}: {:?}", a.inertia_trace);
        }
    }
}

#[test]
fn eight_separated_blobs_recovered_exactly() {
    let set = common::separated_blobs(50, 16, 3);
    let a = kmeans::kmeans(&set.to_f64(), 8, 1).unwrap();
    let s = metrics::pairwise_prf(&a.labels, set.labels().unwrap()).unwrap();
    assert_eq!(s.f1, 1.0);
}

#[test]
fn seeding_hits_each_of_three_blobs() {
    let (data, labels) = blobs(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]], 30, 0.5, 7);
    let mut good = 0;
    for seed in 0..1000 {
        let c = kmeans::kmeanspp_seed(&data, 3, seed).unwrap();
        let mut hit = [false; 3];
        for row in c.outer_iter() {
            let i = (0..data.nrows()).find(|&i| data.row(i) == row).unwrap();
            hit[labels[i]] = true;
        }
        good += hit.iter().all(|&h| h) as usize;
    }
    assert!(good >= 950, "{good} of 1000");
}

#[test]
fn kernel_rows_recover_four_blobs() {
    let (data, labels) = blobs(
        &[[0.0, 0.0], [12.0, 0.0], [0.0, 12.0], [12.0, 12.0]],
        40,
        0.7,
        2,
    );
    let n = data.nrows();
    let median = kernel::median_pairwise_sq_dist(&data).unwrap();
    let sigma = kernel::compute_sigma(median, 4, n, 1).unwrap().sigma;
    let z = kernel::rbf_kernel_matrix(&data, sigma).unwrap();
    let a = kmeans::kmeans(&z.z, 4, 0).unwrap();
    assert!(metrics::pairwise_prf(&a.labels, &labels).unwrap().f1 >= 0.99);
}

#[test]
fn tight_pairs_inertia_by_hand() {
    let data = ndarray::array![[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]];
    let a = kmeans::kmeans(&data, 2, 4).unwrap();
    assert_eq!(a.labels[0], a.labels[1]);
    assert_eq!(a.labels[2], a.labels[3]);
    assert_ne!(a.labels[0], a.labels[2]);
    // Each point is 1 away from its pair's midpoint.
    assert!((a.inertia - 4.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn labels_in_range_and_deterministic(n in 10usize..60, k in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let a = kmeans::kmeans(&data, k, seed).unwrap();
        let b = kmeans::kmeans(&data, k, seed).unwrap();
        prop_assert!(a.labels.iter().all(|&l| l < k));
        prop_assert_eq!(&a.labels, &b.labels);
        prop_assert!(a.centroids.iter().all(|v| v.is_finite()));
    }
}
