//! Likelihoods and brute-force maximum-a-posteriori label recovery.
//!
//! Labels are uniform a priori, so the MAP labeling is the maximum
//! likelihood labeling and `log_posterior = log_likelihood - n ln 2` up to
//! the (label-free) evidence term.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::info::edge_moment;
use crate::model::{LabelVector, ModelSpec};
use crate::process::{bernoulli_ln, check_compatible, walk, LatentSource};
use crate::samplers::latent::gaussian_rows;
use crate::samplers::{ergm_edge_probs, LatentMatrix};
use crate::seed::Seed;

/// Largest `n` for exhaustive search over `2^n` labelings.
pub const MAX_RECOVERY_NODES: usize = 20;

const DEFAULT_DRAWS: usize = 512;

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

/// How latent-space likelihoods are evaluated. Models without latents are
/// always exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LikelihoodMode {
    /// Independent edges with the averaged per-pair link probability.
    #[default]
    Surrogate,
    /// Log-mean-exp over `draws` latent samples. The same standard-normal
    /// draws are reused for every labeling and come in antithetic pairs
    /// `ε, -ε`, which keeps the estimate invariant under `y -> -y`.
    MonteCarlo {
        #[serde(default = "default_draws")]
        draws: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl LikelihoodMode {
    pub fn monte_carlo(seed: u64) -> Self {
        LikelihoodMode::MonteCarlo {
            draws: DEFAULT_DRAWS,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub y_hat: LabelVector,
    pub log_posterior: f64,
    /// Labelings whose posterior is within `1e-9·max(1, |best|)` of the best.
    pub ties: u64,
    pub mode: LikelihoodMode,
    /// True when a latent model was scored through the surrogate.
    pub edge_marginal_surrogate: bool,
}

/// `ln P(A = g | Y = y)`.
pub fn log_likelihood(spec: &ModelSpec, y: &LabelVector, g: &Graph, mode: LikelihoodMode) -> Result<f64> {
    check_compatible(spec, y, g)?;
    let scorer = Scorer::new(spec, g, mode)?;
    let ll = scorer.score(y)?;
    if ll == f64::NEG_INFINITY {
        return Err(Error::ImpossibleObservation(format!(
            "graph has probability 0 under {} with the given labels",
            spec.kind()
        )));
    }
    Ok(ll)
}

struct Scorer<'a> {
    spec: &'a ModelSpec,
    g: &'a Graph,
    noise: Option<Vec<LatentMatrix>>,
}

impl<'a> Scorer<'a> {
    fn new(spec: &'a ModelSpec, g: &'a Graph, mode: LikelihoodMode) -> Result<Self> {
        let noise = match (mode, spec.has_latents()) {
            (LikelihoodMode::MonteCarlo { draws, seed }, true) => {
                if draws == 0 {
                    return Err(Error::range("draws", "need at least one latent draw"));
                }
                let d = match spec {
                    ModelSpec::Lsm { d, .. } | ModelSpec::Dlsm { d, .. } => *d,
                    _ => unreachable!(),
                };
                let mut rng = Seed::new(seed, 0).rng();
                let mut noise = Vec::with_capacity(draws);
                while noise.len() < draws {
                    let eps = gaussian_rows(&mut rng, g.n(), d, 1.0, |_, _| 0.0);
                    let negated = LatentMatrix::new(
                        d,
                        (0..g.n()).map(|i| eps.row(i).iter().map(|e| -e).collect()).collect(),
                    );
                    noise.push(eps);
                    if noise.len() < draws {
                        noise.push(negated);
                    }
                }
                Some(noise)
            }
            _ => None,
        };
        Ok(Scorer { spec, g, noise })
    }

    fn ln_given(&self, y: &LabelVector, latent: LatentSource<'_>) -> Result<f64> {
        let mut total = 0.0;
        walk(self.spec, y, latent, |draw| {
            let present = self.g.has_edge(draw.from, draw.to);
            total += bernoulli_ln(draw.prob, present);
            Ok(present)
        })?;
        Ok(total)
    }

    fn score(&self, y: &LabelVector) -> Result<f64> {
        let Some(noise) = &self.noise else {
            return self.ln_given(y, LatentSource::Surrogate);
        };
        let (mu, sigma) = match self.spec {
            ModelSpec::Lsm { mu, sigma, .. } | ModelSpec::Dlsm { mu, sigma, .. } => (mu, *sigma),
            _ => unreachable!(),
        };
        let terms = noise
            .iter()
            .map(|eps| {
                let z = LatentMatrix::new(
                    mu.len(),
                    (0..y.len())
                        .map(|i| {
                            eps.row(i)
                                .iter()
                                .zip(mu)
                                .map(|(e, m)| f64::from(y.get(i)) * m + sigma * e)
                                .collect()
                        })
                        .collect(),
                );
                self.ln_given(y, LatentSource::Known(&z))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(log_mean_exp(&terms))
    }
}

fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + (values.iter().map(|v| (v - max).exp()).sum::<f64>() / values.len() as f64).ln()
}

/// Best labeling under an arbitrary score over label codes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Argmax {
    pub code: u64,
    pub score: f64,
    pub ties: u64,
}

fn tie_tolerance(best: f64) -> f64 {
    1e-9 * best.abs().max(1.0)
}

/// Exhaustive argmax of `scores[code]`; ties go to the smallest code.
fn argmax_of(scores: &[f64]) -> Option<Argmax> {
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY || best.is_nan() {
        return None;
    }
    let tol = tie_tolerance(best);
    let mut tied = scores.iter().enumerate().filter(|(_, &s)| s >= best - tol);
    let (code, _) = tied.next()?;
    Some(Argmax {
        code: code as u64,
        score: best,
        ties: 1 + tied.count() as u64,
    })
}

fn search_guard(n: usize) -> Result<()> {
    if n > MAX_RECOVERY_NODES {
        return Err(Error::TooLarge {
            what: "nodes for exhaustive label search",
            size: n,
            limit: MAX_RECOVERY_NODES,
        });
    }
    Ok(())
}

/// Evaluates `score` on all `2^n` label codes (bit `i` set means node `i`
/// is `-1`) and returns the maximizer.
pub fn argmax_labeling<F>(n: usize, score: F) -> Result<Argmax>
where
    F: Fn(u64) -> f64 + Sync,
{
    search_guard(n)?;
    let scores: Vec<f64> = (0..1u64 << n).into_par_iter().map(&score).collect();
    argmax_of(&scores).ok_or_else(|| Error::ImpossibleObservation("every labeling has probability 0".into()))
}

/// Per-pair `(ln P(A_ij | same label), ln P(A_ij | different labels))`
/// when the model has independent edges with finite log-probabilities.
fn independent_terms(spec: &ModelSpec, g: &Graph, mode: LikelihoodMode) -> Option<Vec<(f64, f64)>> {
    let (p, q) = match spec {
        ModelSpec::Sbm { p, q } => (*p, *q),
        ModelSpec::Ergm { beta } => ergm_edge_probs(*beta),
        ModelSpec::Lsm { mu, sigma, .. } if mode == LikelihoodMode::Surrogate => {
            (edge_moment(mu, *sigma, true), edge_moment(mu, *sigma, false))
        }
        _ => return None,
    };
    let n = g.n();
    let mut terms = vec![(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let a = g.has_edge(i, j);
            let t = (bernoulli_ln(p, a), bernoulli_ln(q, a));
            if !t.0.is_finite() || !t.1.is_finite() {
                return None;
            }
            terms[i * n + j] = t;
            terms[j * n + i] = t;
        }
    }
    Some(terms)
}

/// Gray-code sweep: consecutive codes differ in one label, so each score is
/// the previous one plus an `O(n)` correction.
fn gray_scores(n: usize, terms: &[(f64, f64)]) -> Vec<f64> {
    let mut scores = vec![0.0; 1 << n];
    let mut y = vec![true; n];
    let mut current: f64 = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| terms[i * n + j].0)
        .sum();
    scores[0] = current;
    for k in 1u64..1 << n {
        let b = k.trailing_zeros() as usize;
        for j in (0..n).filter(|&j| j != b) {
            let (same, diff) = terms[b * n + j];
            current += if y[b] == y[j] { diff - same } else { same - diff };
        }
        y[b] = !y[b];
        scores[(k ^ (k >> 1)) as usize] = current;
    }
    scores
}

fn exact_independent_score(n: usize, terms: &[(f64, f64)], code: u64) -> f64 {
    let y = LabelVector::from_code(n, code);
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let t = terms[i * n + j];
            if y.same(i, j) {
                t.0
            } else {
                t.1
            }
        })
        .sum()
}

/// Exhaustive MAP labeling of `g` under a uniform label prior.
pub fn map_recover(spec: &ModelSpec, g: &Graph, mode: LikelihoodMode) -> Result<RecoveryResult> {
    let n = g.n();
    search_guard(n)?;
    check_compatible(spec, &LabelVector::from_code(n, 0), g)?;

    let best = match independent_terms(spec, g, mode) {
        Some(terms) => {
            let mut scores = gray_scores(n, &terms);
            // Re-sum near-maximal codes directly so accumulated rounding in
            // the sweep cannot decide ties.
            let rough = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let window = 1e3 * tie_tolerance(rough);
            for (code, s) in scores.iter_mut().enumerate() {
                if *s >= rough - window {
                    *s = exact_independent_score(n, &terms, code as u64);
                }
            }
            argmax_of(&scores)
                .ok_or_else(|| Error::ImpossibleObservation("every labeling has probability 0".into()))?
        }
        None => {
            let scorer = Scorer::new(spec, g, mode)?;
            let scores = (0..1u64 << n)
                .into_par_iter()
                .map(|code| scorer.score(&LabelVector::from_code(n, code)))
                .collect::<Result<Vec<_>>>()?;
            argmax_of(&scores)
                .ok_or_else(|| Error::ImpossibleObservation("every labeling has probability 0".into()))?
        }
    };
    Ok(RecoveryResult {
        y_hat: LabelVector::from_code(n, best.code),
        log_posterior: best.score - n as f64 * LN_2,
        ties: best.ties,
        mode,
        edge_marginal_surrogate: spec.has_latents() && mode == LikelihoodMode::Surrogate,
    })
}

fn check_lengths(a: &LabelVector, b: &LabelVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// 1 unless `y_hat == y_star`.
pub fn exact_error(y_hat: &LabelVector, y_star: &LabelVector) -> Result<u8> {
    check_lengths(y_hat, y_star)?;
    Ok(u8::from(y_hat != y_star))
}

/// 1 unless `y_hat` equals `y_star` or `-y_star`.
pub fn flip_error(y_hat: &LabelVector, y_star: &LabelVector) -> Result<u8> {
    check_lengths(y_hat, y_star)?;
    Ok(u8::from(y_hat != y_star && *y_hat != y_star.flipped()))
}
