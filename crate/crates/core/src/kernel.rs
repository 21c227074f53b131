//! RBF kernelization of the 2-D layout and its bandwidth schedule.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the RBF bandwidth is derived from the median squared distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// `median × ln k / (ln N × β)`: shrinks with more iterations and grows
    /// with the per-iteration cluster count.
    #[default]
    CrossIterative,
    /// `median × √N`, the global-alignment-kernel bandwidth. Ignores k and β.
    GlobalAlignment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSchedule {
    pub median_sq_dist: f64,
    pub k: usize,
    pub n: usize,
    pub beta: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    /// Row `i` is the kernelized vector of point `i`.
    pub z: Array2<f64>,
    pub sigma: f64,
    /// Entries that underflowed to zero and were raised to the smallest
    /// positive normal `f64`.
    pub underflow_count: usize,
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.nrows() == 0
    }
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of squared Euclidean distances over all unordered pairs. For an
/// even pair count the lower of the two middle values is taken.
pub fn median_pairwise_sq_dist(points: &Array2<f64>) -> Result<f64> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "median distance needs N >= 2, got {n}"
        )));
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(sq_dist(points.row(i), points.row(j)));
        }
    }
    let mid = (d.len() - 1) / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    Ok(*m)
}

pub fn compute_sigma(
    median_sq_dist: f64,
    k: usize,
    n: usize,
    beta: usize,
) -> Result<SigmaSchedule> {
    compute_sigma_with(SigmaRule::CrossIterative, median_sq_dist, k, n, beta)
}

pub fn compute_sigma_with(
    rule: SigmaRule,
    median_sq_dist: f64,
    k: usize,
    n: usize,
    beta: usize,
) -> Result<SigmaSchedule> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "cluster count k must be >= 2, got {k}"
        )));
    }
    if n < 3 {
        return Err(Error::invalid(format!("N must be >= 3, got {n}")));
    }
    if beta < 1 {
        return Err(Error::invalid("beta must be >= 1"));
    }
    if !(median_sq_dist.is_finite() && median_sq_dist >= 0.0) {
        return Err(Error::invalid(format!(
            "median distance must be finite and >= 0, got {median_sq_dist}"
        )));
    }
    let sigma = match rule {
        SigmaRule::CrossIterative => {
            median_sq_dist * (k as f64).ln() / ((n as f64).ln() * beta as f64)
        }
        SigmaRule::GlobalAlignment => median_sq_dist * (n as f64).sqrt(),
    };
    if sigma <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "median pairwise distance is zero, all points coincide".into(),
        ));
    }
    Ok(SigmaSchedule {
        median_sq_dist,
        k,
        n,
        beta,
        sigma,
    })
}

/// `Z[i][j] = exp(−‖x_i − x_j‖² / (2σ²))`.
pub fn rbf_kernel_matrix(points: &Array2<f64>, sigma: f64) -> Result<KernelMatrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let n = points.nrows();
    let denom = 2.0 * sigma * sigma;
    let mut z = Array2::<f64>::zeros((n, n));
    let mut underflow_count = 0;
    for i in 0..n {
        z[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let mut v = (-sq_dist(points.row(i), points.row(j)) / denom).exp();
            if v.is_nan() {
                return Err(Error::DegenerateGeometry(format!(
                    "kernel entry ({i}, {j}) is NaN"
                )));
            }
            if v < f64::MIN_POSITIVE {
                v = f64::MIN_POSITIVE;
                underflow_count += 1;
            }
            z[[i, j]] = v;
            z[[j, i]] = v;
        }
    }
    Ok(KernelMatrix {
        z,
        sigma,
        underflow_count,
    })
}
