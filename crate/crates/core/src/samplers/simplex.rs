//! Projection of a probability vector onto the capped simplex
//! `{w : w_i ∈ [0, 1/m], Σ w_i = 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;
const CAP_TOL: f64 = 1e-12;

/// A point of the k-simplex, optionally carrying the cap it satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    w: Vec<f64>,
    cap: Option<f64>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::range("w", "empty weight vector"));
        }
        if let Some(x) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::range("w", format!("negative or non-finite weight {x}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::range("w", format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector { w, cap: None })
    }

    /// Normalizes nonnegative scores to unit mass.
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        let total: f64 = scores.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::range("w", "scores must have positive finite mass"));
        }
        WeightVector::new(scores.iter().map(|s| s / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }
}

/// Caps every weight at `1/m`, handing the excess out evenly to the entries
/// still below the cap.
///
/// Entries above the cap are clipped in index order and their excess is
/// spread over the below-cap entries; a receiver that would overshoot is
/// filled to the cap and the remainder carried to the others in the same
/// pass. Passes repeat until no entry exceeds the cap. The result is the
/// Euclidean projection onto the capped simplex: the uncapped entries all
/// shift by one common amount.
pub fn cap_simplex(w: &WeightVector, m: usize) -> Result<WeightVector> {
    let k = w.len();
    if m == 0 {
        return Err(Error::range("m", "must be a positive integer"));
    }
    if m > k {
        return Err(Error::Infeasible { k, m });
    }
    let cap = 1.0 / m as f64;
    let mut out = w.w.clone();
    cap_in_place(&mut out, cap);
    debug_assert!(out.iter().all(|&x| x <= cap + CAP_TOL));
    debug_assert!((out.iter().sum::<f64>() - 1.0).abs() <= SUM_TOL);
    Ok(WeightVector { w: out, cap: Some(cap) })
}

fn cap_in_place(w: &mut [f64], cap: f64) {
    let mut receivers: Vec<usize> = Vec::with_capacity(w.len());
    loop {
        let mut changed = false;
        for i in 0..w.len() {
            if w[i] <= cap {
                continue;
            }
            let excess = w[i] - cap;
            w[i] = cap;
            changed = true;

            receivers.clear();
            receivers.extend((0..w.len()).filter(|&j| w[j] < cap));
            receivers.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
            // Smallest headroom first, so clipped receivers pass their share on.
            let mut remaining = excess;
            let count = receivers.len();
            for (taken, &j) in receivers.iter().enumerate() {
                let share = remaining / (count - taken) as f64;
                let room = cap - w[j];
                if room <= share {
                    w[j] = cap;
                    remaining -= room;
                } else {
                    w[j] += share;
                    remaining -= share;
                }
            }
        }
        if !changed {
            break;
        }
    }
}
