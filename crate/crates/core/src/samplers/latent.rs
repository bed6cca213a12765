use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::LabelVector;

/// Latent positions, one `d`-vector per node.
///
/// Serializes as the sidecar document `{"d": 2, "z": [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentMatrix {
    d: usize,
    z: Vec<Vec<f64>>,
}

impl LatentMatrix {
    pub fn new(d: usize, z: Vec<Vec<f64>>) -> Self {
        assert!(z.iter().all(|row| row.len() == d), "every row must have length d");
        LatentMatrix { d, z }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.z[i]
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        self.z[i]
            .iter()
            .zip(&self.z[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Draws `z_i = centre_i + σ ε_i` with `ε_i ~ N(0, I_d)`. Normals are taken
/// node by node, coordinate by coordinate, from `rng` via the ziggurat
/// transform of `rand_distr::StandardNormal`.
pub(crate) fn gaussian_rows<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    sigma: f64,
    centre: impl Fn(usize, usize) -> f64,
) -> LatentMatrix {
    let z = (0..n)
        .map(|i| {
            (0..d)
                .map(|k| centre(i, k) + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    LatentMatrix::new(d, z)
}

/// Latent positions of the latent space model: `z_i ~ N(y_i μ, σ² I)`.
pub fn sample_latents<R: Rng + ?Sized>(
    labels: &LabelVector,
    mu: &[f64],
    sigma: f64,
    rng: &mut R,
) -> LatentMatrix {
    gaussian_rows(rng, labels.len(), mu.len(), sigma, |i, k| {
        f64::from(labels.get(i)) * mu[k]
    })
}
