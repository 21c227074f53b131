//! The bandwidth schedule and the RBF kernel over a 2-D layout.

use cikics::kernel::{self, SigmaRule};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cikics::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points = Array2::from_shape_fn((300, 2), |_| rng.random_range(-20.0..20.0));
    let n = points.nrows();
    let median = kernel::median_pairwise_sq_dist(&points)?;
    let k = cikics::cross_iter::default_k(n);
    println!("N={n} k={k} median squared distance {median:.2}");

    for beta in [1, 2, 3, 6] {
        let s = kernel::compute_sigma(median, k, n, beta)?;
        let z = kernel::rbf_kernel_matrix(&points, s.sigma)?;
        let off_diag_mean = (z.z.sum() - n as f64) / (n * (n - 1)) as f64;
        println!(
            "beta={beta}: sigma={:8.3} mean off-diagonal entry {off_diag_mean:.4}",
            s.sigma
        );
    }
    let g = kernel::compute_sigma_with(SigmaRule::GlobalAlignment, median, k, n, 3)?;
    println!("global-alignment bandwidth for comparison: {:.3}", g.sigma);
    Ok(())
}
