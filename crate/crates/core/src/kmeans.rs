//! K-means++ seeding and Lloyd iterations.
//!
//! Used directly as a baseline, on kernel-matrix rows, and to merge cluster
//! centroids. Nearest-centroid ties go to the lower centroid index and empty
//! clusters are re-seeded from the point farthest from its centroid.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Above this dimensionality distances go through a matrix product instead
/// of a direct difference loop.
const GEMM_MIN_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after every assignment step, ending with the final one.
    pub inertia_trace: Vec<f64>,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Member indices of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Independent seedings to try; the lowest-inertia result wins.
    pub restarts: usize,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iters: 300,
            tol: 1e-6,
            seed,
            restarts: 1,
        }
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// K-means++ initial centroids: the first uniformly at random, each next one
/// with probability proportional to its squared distance to the closest
/// centroid already chosen.
pub fn kmeanspp_seed(data: &Array2<f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let n = data.nrows();
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if n < k {
        return Err(Error::TooFewDistinct { k, found: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = data
        .outer_iter()
        .map(|x| sq_dist(x, data.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            return Err(Error::TooFewDistinct {
                k,
                found: chosen.len(),
            });
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let next = pick.expect("positive total mass");
        chosen.push(next);
        let c = data.row(next);
        for (i, x) in data.outer_iter().enumerate() {
            let d = sq_dist(x, c);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    Ok(data.select(Axis(0), &chosen))
}

/// Nearest-centroid labels and squared distances.
fn assign(data: &Array2<f64>, centroids: &Array2<f64>, labels: &mut [usize], dists: &mut [f64]) {
    let k = centroids.nrows();
    if data.ncols() < GEMM_MIN_DIM {
        for (i, x) in data.outer_iter().enumerate() {
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let d = sq_dist(x, centroids.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            labels[i] = best.0;
            dists[i] = best.1;
        }
        return;
    }
    // ‖x − c‖² = ‖x‖² + ‖c‖² − 2 x·c, after centering both on the data mean
    // to limit cancellation.
    let mean = data.mean_axis(Axis(0)).expect("non-empty data");
    let xc = data - &mean;
    let cc = centroids - &mean;
    let x_norm: Array1<f64> = xc.outer_iter().map(|r| r.dot(&r)).collect();
    let c_norm: Array1<f64> = cc.outer_iter().map(|r| r.dot(&r)).collect();
    let cross = xc.dot(&cc.t());
    for (i, row) in cross.outer_iter().enumerate() {
        let mut best = (0, f64::INFINITY);
        for c in 0..k {
            let d = c_norm[c] - 2.0 * row[c];
            if d < best.1 {
                best = (c, d);
            }
        }
        labels[i] = best.0;
        dists[i] = (x_norm[i] + best.1).max(0.0);
    }
}

/// Moves centroids of empty clusters onto the points farthest from their
/// current centroids, taking points only from clusters with spare members.
fn repair_empty(
    labels: &mut [usize],
    dists: &mut [f64],
    centroids: &mut Array2<f64>,
    data: &Array2<f64>,
) {
    let k = centroids.nrows();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, &d) in dists.iter().enumerate() {
            if counts[labels[i]] > 1 && far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let Some((p, _)) = far else { break };
        counts[labels[p]] -= 1;
        labels[p] = c;
        counts[c] = 1;
        dists[p] = 0.0;
        centroids.row_mut(c).assign(&data.row(p));
    }
}

/// Lloyd iterations from `init` until the largest centroid move falls below
/// `tol` or `max_iters` updates have run.
pub fn lloyd(
    data: &Array2<f64>,
    init: Array2<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<ClusterAssignment> {
    let n = data.nrows();
    if n == 0 || init.nrows() == 0 || init.ncols() != data.ncols() {
        return Err(Error::invalid(
            "lloyd needs non-empty data and centroids of matching width",
        ));
    }
    let k = init.nrows();
    let mut centroids = init;
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0f64; n];
    let mut trace = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..max_iters {
        assign(data, &centroids, &mut labels, &mut dists);
        trace.push(dists.iter().sum());
        repair_empty(&mut labels, &mut dists, &mut centroids, data);

        let mut sums = Array2::<f64>::zeros(centroids.dim());
        let mut counts = vec![0usize; k];
        for (i, x) in data.outer_iter().enumerate() {
            let mut s = sums.row_mut(labels[i]);
            s += &x;
            counts[labels[i]] += 1;
        }
        let mut shift = 0.0f64;
        for (c, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let mut s = sums.row_mut(c);
            s /= count as f64;
            shift = shift.max(sq_dist(s.view(), centroids.row(c)).sqrt());
            centroids.row_mut(c).assign(&s);
        }
        iterations_run += 1;
        if shift < tol {
            break;
        }
    }
    assign(data, &centroids, &mut labels, &mut dists);
    let inertia: f64 = dists.iter().sum();
    trace.push(inertia);
    Ok(ClusterAssignment {
        labels,
        centroids,
        inertia,
        iterations_run,
        inertia_trace: trace,
    })
}

/// K-means++ seeding followed by Lloyd iterations.
pub fn kmeans(data: &Array2<f64>, k: usize, seed: u64) -> Result<ClusterAssignment> {
    kmeans_with(data, &KMeansParams::new(k, seed))
}

/// Runs `params.restarts` seedings (at least one). The first uses
/// `params.seed` itself, so a single restart equals [`kmeans`]; ties in
/// inertia keep the earlier run.
pub fn kmeans_with(data: &Array2<f64>, params: &KMeansParams) -> Result<ClusterAssignment> {
    let mut seeds = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<ClusterAssignment> = None;
    for r in 0..params.restarts.max(1) {
        let seed = if r == 0 { params.seed } else { seeds.random() };
        let init = kmeanspp_seed(data, params.k, seed)?;
        let run = lloyd(data, init, params.max_iters, params.tol)?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn restarts_never_worse_than_first_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = Array2::from_shape_fn((60, 2), |_| rng.random_range(-1.0..1.0));
        for seed in 0..10 {
            let single = kmeans(&data, 6, seed).unwrap();
            let multi = kmeans_with(
                &data,
                &KMeansParams {
                    restarts: 8,
                    ..KMeansParams::new(6, seed)
                },
            )
            .unwrap();
            assert!(multi.inertia <= single.inertia);
        }
    }

    #[test]
    fn k_equals_n_picks_every_point() {
        let data = array![[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [7.0, 7.0], [2.0, 5.0]];
        for seed in 0..20 {
            let c = kmeanspp_seed(&data, 5, seed).unwrap();
            let mut rows: Vec<Vec<f64>> = c.outer_iter().map(|r| r.to_vec()).collect();
            rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut expected: Vec<Vec<f64>> = data.outer_iter().map(|r| r.to_vec()).collect();
            expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(rows, expected);
        }
    }

    #[test]
    fn two_far_points_both_chosen() {
        let data = array![[0.0], [1000.0]];
        for seed in 0..20 {
            let c = kmeanspp_seed(&data, 2, seed).unwrap();
            assert_ne!(c[[0, 0]], c[[1, 0]]);
        }
    }

    #[test]
    fn repeated_point_cannot_seed_two() {
        let data = Array2::from_elem((10, 3), 1.5);
        assert!(matches!(
            kmeans(&data, 2, 0),
            Err(Error::TooFewDistinct { k: 2, found: 1 })
        ));
    }

    #[test]
    fn two_tight_pairs() {
        let data = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        let r = kmeans(&data, 2, 4).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
        // Each point sits 0.5 from its pair's midpoint.
        assert!((r.inertia - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data = array![[1.0, 2.0], [3.0, 2.0], [2.0, 5.0], [6.0, -1.0]];
        let r = kmeans(&data, 1, 9).unwrap();
        let mean = data.mean_axis(Axis(0)).unwrap();
        for c in 0..2 {
            assert!((r.centroids[[0, c]] - mean[c]).abs() < 1e-12);
        }
        let var_times_n: f64 = data.outer_iter().map(|x| sq_dist(x, mean.view())).sum();
        assert!((r.inertia - var_times_n).abs() < 1e-12);
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        let data = array![[0.0], [1.0], [2.0], [10.0]];
        // Second centroid starts far from everything and captures nothing.
        let r = lloyd(&data, array![[1.0], [100.0]], 50, 1e-9).unwrap();
        assert_eq!(r.cluster_sizes(), vec![3, 1]);
        assert_eq!(r.labels[3], 1);
    }

    #[test]
    fn gemm_path_matches_direct_path() {
        let n = 40;
        let data = Array2::from_shape_fn((n, 80), |(i, j)| {
            ((i * 31 + j * 17) % 23) as f64 / 7.0 + (i % 3) as f64 * 5.0
        });
        let init = data.select(Axis(0), &[0, 1, 2]);
        let mut l1 = vec![0; n];
        let mut d1 = vec![0.0; n];
        assign(&data, &init, &mut l1, &mut d1);
        for (i, x) in data.outer_iter().enumerate() {
            let direct: Vec<f64> = init.outer_iter().map(|c| sq_dist(x, c)).collect();
            let best = direct.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!((d1[i] - best).abs() < 1e-9 * best.max(1.0));
        }
    }

    #[test]
    fn seeded_determinism() {
        let data = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 7 + j * 13) % 11) as f64);
        assert_eq!(kmeans(&data, 4, 5).unwrap(), kmeans(&data, 4, 5).unwrap());
    }
}
