//! Seeded Gaussian-mixture generator for benchmarks and tests.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::EmbeddingSet;

/// Isotropic Gaussian classes around random centers.
///
/// Centers are drawn as random directions scaled so that the expected
/// distance between two centers is `separation`; samples add `spread`
/// standard-deviation noise per coordinate. The ratio of the two controls
/// how much neighbouring classes overlap. A non-zero `stretch` adds extra
/// noise with that standard deviation along one random axis per class, so
/// classes become elongated rather than spherical.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub class_sizes: Vec<usize>,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
    pub stretch: f64,
    pub seed: u64,
}

impl Mixture {
    pub fn balanced(
        classes: usize,
        per_class: usize,
        dim: usize,
        separation: f64,
        spread: f64,
        seed: u64,
    ) -> Self {
        Self {
            class_sizes: vec![per_class; classes],
            dim,
            separation,
            spread,
            stretch: 0.0,
            seed,
        }
    }

    pub fn with_stretch(mut self, stretch: f64) -> Self {
        self.stretch = stretch;
        self
    }

    /// Labelled samples in shuffled order; ids are `s00000`, `s00001`, ...
    /// and labels `c0`, `c1`, ...
    pub fn generate(&self) -> EmbeddingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let radius = self.separation / std::f64::consts::SQRT_2;
        let mut direction = |scale: f64| -> Vec<f64> {
            let v: Vec<f64> = (0..self.dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = v
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| x * scale / norm).collect()
        };
        let centers: Vec<Vec<f64>> = self.class_sizes.iter().map(|_| direction(radius)).collect();
        let axes: Vec<Vec<f64>> = self.class_sizes.iter().map(|_| direction(1.0)).collect();

        let mut rows: Vec<(usize, Vec<f32>)> = Vec::new();
        for (c, &size) in self.class_sizes.iter().enumerate() {
            for _ in 0..size {
                let t = if self.stretch > 0.0 {
                    self.stretch * Distribution::<f64>::sample(&StandardNormal, &mut rng)
                } else {
                    0.0
                };
                let x = centers[c]
                    .iter()
                    .zip(&axes[c])
                    .map(|(&m, &a)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (m + t * a + self.spread * z) as f32
                    })
                    .collect();
                rows.push((c, x));
            }
        }
        rows.shuffle(&mut rng);

        let n = rows.len();
        let mut values = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        for (c, x) in rows {
            labels.push(format!("c{c}"));
            values.extend(x);
        }
        let ids = (0..n).map(|i| format!("s{i:05}")).collect();
        let vectors = Array2::from_shape_vec((n, self.dim), values).expect("consistent shape");
        EmbeddingSet::new(ids, vectors, Some(labels)).expect("generated set is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_determinism() {
        let m = Mixture {
            class_sizes: vec![5, 7, 3],
            dim: 4,
            separation: 10.0,
            spread: 1.0,
            stretch: 2.0,
            seed: 3,
        };
        let a = m.generate();
        assert_eq!(a.len(), 15);
        assert_eq!(a.dim(), 4);
        let labels = a.labels().unwrap();
        assert_eq!(labels.iter().filter(|l| *l == "c1").count(), 7);
        assert_eq!(a, m.generate());
    }
}
