//! Exact small-graph and Monte-Carlo information quantities.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{norm, LabelVector, ModelSpec};
use crate::process::{bernoulli_ln, walk, LatentSource};
use crate::samplers::latent::gaussian_rows;
use crate::samplers::{ergm_edge_probs, LatentMatrix};
use crate::seed::Seed;
use crate::thresholds::{chi2_bound, kl_bernoulli, kl_bernoulli_unchecked};

/// Largest number of candidate edges we are willing to enumerate.
pub const MAX_ENUMERATED_EDGES: usize = 20;

/// The full law `P(A | Y)` over every graph on `n` nodes.
///
/// Graphs are indexed by a bitmask over [`ModelSpec::pair_order`]: bit `t`
/// is the `t`-th candidate edge in generation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDistribution {
    pub n: usize,
    pub directed: bool,
    pub pairs: Vec<(usize, usize)>,
    pub probs: Vec<f64>,
    /// Latent models are enumerated through the independent-edge surrogate.
    pub edge_marginal_surrogate: bool,
}

impl GraphDistribution {
    pub fn graph(&self, mask: usize) -> Graph {
        let mut g = Graph::empty(self.n, self.directed);
        for (t, &(a, b)) in self.pairs.iter().enumerate() {
            if mask >> t & 1 == 1 {
                g.set_edge(a, b, true);
            }
        }
        g
    }

    pub fn mask_of(&self, g: &Graph) -> usize {
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| g.has_edge(a, b))
            .fold(0, |acc, (t, _)| acc | 1 << t)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn enumeration_guard(spec: &ModelSpec, n: usize) -> Result<usize> {
    let edges = spec.pair_order(n).len();
    if edges > MAX_ENUMERATED_EDGES {
        return Err(Error::TooLarge {
            what: "candidate edges",
            size: edges,
            limit: MAX_ENUMERATED_EDGES,
        });
    }
    Ok(edges)
}

/// `ln P(mask | labels)` under the generation process.
fn ln_prob_of_mask(
    spec: &ModelSpec,
    labels: &LabelVector,
    latent: LatentSource<'_>,
    mask: usize,
) -> Result<f64> {
    let mut t = 0;
    let mut total = 0.0;
    walk(spec, labels, latent, |draw| {
        let present = mask >> t & 1 == 1;
        t += 1;
        total += bernoulli_ln(draw.prob, present);
        Ok(present)
    })?;
    Ok(total)
}

/// Normalizes log-weights in place into probabilities.
fn normalize_log(weights: &mut [f64]) {
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|w| (w - max).exp()).sum();
    let log_z = max + total.ln();
    for w in weights.iter_mut() {
        *w = (*w - log_z).exp();
    }
}

/// Exact `P(A | Y)` for every graph. Latent models use the edge-marginal
/// surrogate built from [`lsm_edge_moment`].
pub fn enumerate_distribution(spec: &ModelSpec, labels: &LabelVector) -> Result<GraphDistribution> {
    let n = labels.len();
    spec.validate(n)?;
    let edges = enumeration_guard(spec, n)?;
    let mut probs = (0..1usize << edges)
        .into_par_iter()
        .map(|mask| ln_prob_of_mask(spec, labels, LatentSource::Surrogate, mask))
        .collect::<Result<Vec<_>>>()?;
    normalize_log(&mut probs);
    Ok(GraphDistribution {
        n,
        directed: spec.is_directed(),
        pairs: spec.pair_order(n),
        probs,
        edge_marginal_surrogate: spec.has_latents(),
    })
}

fn relative_entropy(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

/// `KL(P_{A|Y} ‖ P_{A|Y'})` in nats, by enumeration.
pub fn kl_graph(spec: &ModelSpec, y: &LabelVector, y_alt: &LabelVector) -> Result<f64> {
    if y.len() != y_alt.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: y_alt.len(),
        });
    }
    let p = enumerate_distribution(spec, y)?;
    let q = enumerate_distribution(spec, y_alt)?;
    Ok(relative_entropy(&p.probs, &q.probs).max(0.0))
}

/// The graph KL split into per-edge conditional terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlDecomposition {
    /// `KL(P_{A|Y} ‖ P_{A|Y'})` computed over whole graphs.
    pub total: f64,
    /// `Σ_edges E_{A ~ P(·|Y)}[KL(edge | its history, Y ‖ edge | its history, Y')]`.
    pub edgewise: f64,
    /// Largest single edge-conditional KL over edges and reachable histories.
    pub max_term: f64,
    /// `C(n, 2) · max_term`.
    pub bound: f64,
}

/// Computes both sides of the per-edge decomposition of the graph KL for
/// sequentially generated models, together with its `C(n,2)·max` bound.
pub fn kl_decomposition(spec: &ModelSpec, y: &LabelVector, y_alt: &LabelVector) -> Result<KlDecomposition> {
    let total = kl_graph(spec, y, y_alt)?;
    let dist = enumerate_distribution(spec, y)?;
    let per_mask = (0..dist.probs.len())
        .into_par_iter()
        .filter(|&mask| dist.probs[mask] > 0.0)
        .map(|mask| {
            let g = dist.graph(mask);
            let a = crate::process::edge_trace(spec, y, &g, LatentSource::Surrogate)?;
            let b = crate::process::edge_trace(spec, y_alt, &g, LatentSource::Surrogate)?;
            let terms: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(x, z)| kl_bernoulli_unchecked(x.prob, z.prob))
                .collect();
            let sum: f64 = terms.iter().sum();
            let max = terms.iter().cloned().fold(0.0, f64::max);
            Ok((dist.probs[mask] * sum, max))
        })
        .collect::<Result<Vec<_>>>()?;
    let edgewise = per_mask.iter().map(|(s, _)| s).sum();
    let max_term = per_mask.iter().map(|&(_, m)| m).fold(0.0, f64::max);
    let pairs = dist.pairs.len() as f64;
    Ok(KlDecomposition {
        total,
        edgewise,
        max_term,
        bound: pairs * max_term,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiMethod {
    ExactEnumeration,
    MonteCarlo,
}

/// A mutual-information value in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value: f64,
    pub method: MiMethod,
    pub standard_error: f64,
    pub edge_marginal_surrogate: bool,
}

/// `I(Y*; A)` under uniform labels, by enumerating every labeling and graph.
pub fn mi_plugin(spec: &ModelSpec, n: usize) -> Result<MiEstimate> {
    spec.validate(n)?;
    enumeration_guard(spec, n)?;
    let labelings = 1u64 << n;
    let conditionals = (0..labelings)
        .map(|code| enumerate_distribution(spec, &LabelVector::from_code(n, code)).map(|d| d.probs))
        .collect::<Result<Vec<_>>>()?;
    let value = mutual_information(&conditionals);
    Ok(MiEstimate {
        value,
        method: MiMethod::ExactEnumeration,
        standard_error: 0.0,
        edge_marginal_surrogate: spec.has_latents(),
    })
}

/// `I(Y; A)` for a uniform prior over the rows of `conditionals`
/// (each row a law of `A`).
fn mutual_information(conditionals: &[Vec<f64>]) -> f64 {
    let k = conditionals.len() as f64;
    let graphs = conditionals[0].len();
    let marginal: Vec<f64> = (0..graphs)
        .map(|a| conditionals.iter().map(|row| row[a]).sum::<f64>() / k)
        .collect();
    let value = conditionals
        .iter()
        .map(|row| relative_entropy(row, &marginal))
        .sum::<f64>()
        / k;
    value.max(0.0)
}

/// Nested Monte-Carlo estimate of the exact latent-model `I(Y*; A)`:
/// `P(A | Y)` is averaged over `draws` latent samples (the same normal
/// draws reused for every labeling), then plugged into the MI sum. The
/// standard error comes from 20 batches of the latent draws.
pub fn mi_latent_monte_carlo(spec: &ModelSpec, n: usize, draws: usize, seed: Seed) -> Result<MiEstimate> {
    spec.validate(n)?;
    let (mu, sigma) = match spec {
        ModelSpec::Lsm { mu, sigma, .. } | ModelSpec::Dlsm { mu, sigma, .. } => (mu, *sigma),
        other => return Err(Error::UnsupportedSpec(format!("{} has no latent positions", other.kind()))),
    };
    let edges = enumeration_guard(spec, n)?;
    const BATCHES: usize = 20;
    if draws < BATCHES {
        return Err(Error::range("draws", format!("need at least {BATCHES} latent draws")));
    }
    // Standard-normal noise shared by all labelings: z = y μ + σ ε.
    let mut rng = seed.rng();
    let noise: Vec<_> = (0..draws)
        .map(|_| gaussian_rows(&mut rng, n, mu.len(), 1.0, |_, _| 0.0))
        .collect();

    let per_labeling = (0..1u64 << n)
        .into_par_iter()
        .map(|code| {
            let y = LabelVector::from_code(n, code);
            let mut sums = vec![vec![0.0; 1 << edges]; BATCHES];
            for (l, eps) in noise.iter().enumerate() {
                let z = LatentMatrix::new(
                    mu.len(),
                    (0..n)
                        .map(|i| {
                            eps.row(i)
                                .iter()
                                .zip(mu)
                                .map(|(e, m)| f64::from(y.get(i)) * m + sigma * e)
                                .collect()
                        })
                        .collect(),
                );
                let batch = l * BATCHES / draws;
                for (mask, slot) in sums[batch].iter_mut().enumerate() {
                    *slot += ln_prob_of_mask(spec, &y, LatentSource::Known(&z), mask)?.exp();
                }
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>>>()?;

    let batch_sizes: Vec<f64> = (0..BATCHES)
        .map(|b| (0..draws).filter(|l| l * BATCHES / draws == b).count() as f64)
        .collect();
    let pooled: Vec<Vec<f64>> = per_labeling
        .iter()
        .map(|sums| {
            (0..1usize << edges)
                .map(|mask| sums.iter().map(|s| s[mask]).sum::<f64>() / draws as f64)
                .collect()
        })
        .collect();
    let value = mutual_information(&pooled);
    let batch_values: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let rows: Vec<Vec<f64>> = per_labeling
                .iter()
                .map(|sums| sums[b].iter().map(|s| s / batch_sizes[b]).collect())
                .collect();
            mutual_information(&rows)
        })
        .collect();
    let mean = batch_values.iter().sum::<f64>() / BATCHES as f64;
    let var = batch_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(MiEstimate {
        value,
        method: MiMethod::MonteCarlo,
        standard_error: (var / BATCHES as f64).sqrt(),
        edge_marginal_surrogate: false,
    })
}

/// Upper bound on `I(Y*; A)` via the largest pairwise KL between label
/// hypotheses.
///
/// Independent-edge models: at most `n²/4` pairs change label agreement
/// between two labelings, giving `(n²/4)·KL(p ‖ q)` (and `n²·(4σ²+1)^{-1-d/2}|μ|²`
/// for the latent model). Dynamic models: `C(n,2)` times the largest
/// edge-conditional KL, itself bounded in closed form.
pub fn mi_pairwise_upper(spec: &ModelSpec, n: usize) -> Result<f64> {
    spec.validate(n)?;
    let nf = n as f64;
    let pairs = nf * (nf - 1.0) / 2.0;
    let latent = |d: usize, mu: &[f64], sigma: f64| {
        (4.0 * sigma * sigma + 1.0).powf(-1.0 - d as f64 / 2.0) * norm(mu).powi(2)
    };
    match spec {
        ModelSpec::Sbm { p, q } => Ok(nf * nf / 4.0 * kl_bernoulli(*p, *q)?),
        ModelSpec::Ergm { beta } => {
            let (p, q) = ergm_edge_probs(*beta);
            Ok(nf * nf / 4.0 * kl_bernoulli(p, q)?)
        }
        ModelSpec::Lsm { d, mu, sigma } => Ok(nf * nf * latent(*d, mu, *sigma)),
        ModelSpec::Dsbm { p, q, .. } => Ok(pairs * chi2_bound(*p, *q)?),
        ModelSpec::Dlsm { d, mu, sigma, .. } => Ok(4.0 * pairs * latent(*d, mu, *sigma)),
        ModelSpec::Dpam { .. } | ModelSpec::Dswm { .. } => Err(Error::UnsupportedSpec(format!(
            "no pairwise MI bound implemented for {}",
            spec.kind()
        ))),
    }
}

/// Lower bound on the probability that any estimator misses the exact
/// labeling: `1 - (I + ln 2)/(n ln 2)`, clamped to `[0, 1]`.
pub fn fano_lower_bound(mi: f64, n: usize) -> f64 {
    let n = n as f64;
    (1.0 - (mi + LN_2) / (n * LN_2)).clamp(0.0, 1.0)
}

/// Probability that two latent-space nodes link, averaged over their
/// latent positions: `(4σ²+1)^{-d/2}` for equal labels, times
/// `exp(-4|μ|²/(4σ²+1))` for different labels.
pub fn lsm_edge_moment(d: usize, mu: &[f64], sigma: f64, same_label: bool) -> Result<f64> {
    ModelSpec::Lsm {
        d,
        mu: mu.to_vec(),
        sigma,
    }
    .validate(2)?;
    Ok(edge_moment(mu, sigma, same_label))
}

pub(crate) fn edge_moment(mu: &[f64], sigma: f64, same_label: bool) -> f64 {
    let spread = 4.0 * sigma * sigma + 1.0;
    let same = spread.powf(-(mu.len() as f64) / 2.0);
    if same_label {
        same
    } else {
        same * (-4.0 * norm(mu).powi(2) / spread).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub estimate: f64,
    pub standard_error: f64,
    pub closed_form: f64,
}

impl MomentCheck {
    /// Whether the closed form lies within `k` standard errors of the estimate.
    pub fn agrees_within(&self, k: f64) -> bool {
        (self.estimate - self.closed_form).abs() <= k * self.standard_error
    }
}

/// Monte-Carlo estimate of `E[exp(-|x_i - x_j + shift|²)]` for independent
/// `x_i, x_j ~ N(0, σ² I_d)`, with `shift = 0` for equal labels and `2μ`
/// otherwise, alongside the closed form.
pub fn mc_moment_check(
    d: usize,
    mu: &[f64],
    sigma: f64,
    same_label: bool,
    samples: usize,
    seed: Seed,
) -> Result<MomentCheck> {
    let closed_form = lsm_edge_moment(d, mu, sigma, same_label)?;
    if samples < 10_000 {
        return Err(Error::range("samples", format!("{samples} < 10^4")));
    }
    const BLOCK: usize = 1 << 14;
    let blocks = samples.div_ceil(BLOCK);
    let (sum, sum_sq) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.child(b as u64).rng();
            let count = BLOCK.min(samples - b * BLOCK);
            let mut acc = (0.0, 0.0);
            for _ in 0..count {
                let dist2: f64 = mu
                    .iter()
                    .map(|&m| {
                        let xi: f64 = rng.sample(StandardNormal);
                        let xj: f64 = rng.sample(StandardNormal);
                        let shift = if same_label { 0.0 } else { 2.0 * m };
                        let v = sigma * (xi - xj) + shift;
                        v * v
                    })
                    .sum();
                let value = (-dist2).exp();
                acc.0 += value;
                acc.1 += value * value;
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let estimate = sum / n;
    let variance = (sum_sq / n - estimate * estimate).max(0.0) * n / (n - 1.0);
    Ok(MomentCheck {
        estimate,
        standard_error: (variance / n).sqrt(),
        closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Modifier, Predecessors};
    use approx::assert_abs_diff_eq;

    fn labels(v: &[i8]) -> LabelVector {
        LabelVector::new(v.to_vec()).unwrap()
    }

    fn bernoulli_entropy(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn sbm_empty_graph_probability() {
        let dist = enumerate_distribution(&ModelSpec::Sbm { p: 0.6, q: 0.4 }, &labels(&[1, 1, -1])).unwrap();
        assert_abs_diff_eq!(dist.probs[0], 0.144, epsilon = 1e-15);
        assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-12);
        let g = dist.graph(0b101);
        assert_eq!(dist.mask_of(&g), 0b101);
    }

    #[test]
    fn enumeration_guard_trips() {
        let y = LabelVector::from_code(7, 0);
        assert!(matches!(
            enumerate_distribution(&ModelSpec::Sbm { p: 0.6, q: 0.4 }, &y),
            Err(Error::TooLarge { size: 21, .. })
        ));
    }

    #[test]
    fn single_edge_kl_reduces_to_bernoulli_kl() {
        let spec = ModelSpec::Sbm { p: 0.6, q: 0.4 };
        let kl = kl_graph(&spec, &labels(&[1, 1]), &labels(&[1, -1])).unwrap();
        assert_abs_diff_eq!(kl, 0.081_093_021_621_632_88, epsilon = 1e-12);
        assert_eq!(kl_graph(&spec, &labels(&[1, -1]), &labels(&[1, -1])).unwrap(), 0.0);
    }

    #[test]
    fn two_node_mutual_information() {
        let mi = mi_plugin(&ModelSpec::Sbm { p: 0.6, q: 0.4 }, 2).unwrap();
        // Closed form h((p+q)/2) - (h(p) + h(q))/2.
        let closed = bernoulli_entropy(0.5) - 0.5 * (bernoulli_entropy(0.6) + bernoulli_entropy(0.4));
        assert_abs_diff_eq!(mi.value, closed, epsilon = 1e-12);
        assert_abs_diff_eq!(mi.value, 0.020_135_513_550_688_87, epsilon = 1e-12);
        assert_eq!(mi.method, MiMethod::ExactEnumeration);
    }

    #[test]
    fn indistinguishable_communities_carry_no_information() {
        let mi = mi_plugin(&ModelSpec::Sbm { p: 0.4 + 1e-9, q: 0.4 }, 3).unwrap();
        assert!(mi.value.abs() <= 1e-8);
    }

    #[test]
    fn mutual_information_grows_with_separation() {
        let mut prev = -1.0;
        for k in 0..11 {
            let p = 0.45 + 0.05 * k as f64;
            let mi = mi_plugin(&ModelSpec::Sbm { p, q: 0.4 }, 2).unwrap().value;
            assert!(mi > prev, "p = {p}");
            prev = mi;
        }
    }

    #[test]
    fn pairwise_bound_examples() {
        let sbm = mi_pairwise_upper(&ModelSpec::Sbm { p: 0.6, q: 0.4 }, 2).unwrap();
        assert_abs_diff_eq!(sbm, 0.081_093_021_621_632_88, epsilon = 1e-12);
        let lsm = ModelSpec::Lsm {
            d: 2,
            mu: vec![1.0, 0.0],
            sigma: 0.5,
        };
        assert_abs_diff_eq!(mi_pairwise_upper(&lsm, 3).unwrap(), 2.25, epsilon = 1e-12);
        let dsbm = ModelSpec::Dsbm {
            p: 0.6,
            q: 0.4,
            modifier: Modifier::Harmonic,
            predecessors: Predecessors::Full,
        };
        assert_abs_diff_eq!(mi_pairwise_upper(&dsbm, 3).unwrap(), 0.5, epsilon = 1e-12);
        assert!(matches!(
            mi_pairwise_upper(&ModelSpec::Dpam { m: 1, s: 1.0 }, 3),
            Err(Error::UnsupportedSpec(_))
        ));
    }

    #[test]
    fn nested_monte_carlo_matches_single_edge_law() {
        let spec = ModelSpec::Lsm {
            d: 2,
            mu: vec![0.6, 0.0],
            sigma: 0.5,
        };
        let exact = mi_plugin(&spec, 2).unwrap();
        assert!(exact.edge_marginal_surrogate);
        let mc = mi_latent_monte_carlo(&spec, 2, 40_000, Seed::new(12, 0)).unwrap();
        assert_eq!(mc.method, MiMethod::MonteCarlo);
        assert!(mc.standard_error > 0.0);
        assert!(
            (mc.value - exact.value).abs() <= 4.0 * mc.standard_error,
            "{mc:?} vs {}",
            exact.value
        );
        assert!(mi_latent_monte_carlo(&ModelSpec::Sbm { p: 0.6, q: 0.4 }, 2, 100, Seed::new(0, 0)).is_err());
    }

    #[test]
    fn fano_examples() {
        assert_eq!(fano_lower_bound(0.0, 2), 0.5);
        assert_abs_diff_eq!(fano_lower_bound(0.020135, 2), 0.485476, epsilon = 1e-6);
        assert_eq!(fano_lower_bound(2.0 * LN_2, 2), 0.0);
        assert_eq!(fano_lower_bound(100.0, 5), 0.0);
        let mut prev = 1.0;
        for k in 0..100 {
            let b = fano_lower_bound(k as f64 * 0.05, 8);
            assert!(b <= prev);
            prev = b;
        }
        assert!(fano_lower_bound(0.0, 1_000_000) > 0.999_99);
    }

    #[test]
    fn edge_moment_examples() {
        assert_abs_diff_eq!(lsm_edge_moment(2, &[1.0, 0.0], 0.5, true).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            lsm_edge_moment(2, &[1.0, 0.0], 0.5, false).unwrap(),
            0.067_667_641_618_306_35,
            epsilon = 1e-12
        );
        let tiny = [1e-9, 0.0];
        assert_abs_diff_eq!(
            lsm_edge_moment(2, &tiny, 0.7, true).unwrap(),
            lsm_edge_moment(2, &tiny, 0.7, false).unwrap(),
            epsilon = 1e-15
        );
        assert!(lsm_edge_moment(0, &[], 1.0, true).is_err());
        assert!(mc_moment_check(0, &[], 1.0, true, 10_000, Seed::new(0, 0)).is_err());
    }

    #[test]
    fn moment_check_one_dimension() {
        let check = mc_moment_check(1, &[1.0], 1.0, true, 200_000, Seed::new(3, 0)).unwrap();
        assert_abs_diff_eq!(check.closed_form, 0.447_213_595_499_957_9, epsilon = 1e-12);
        assert!(check.agrees_within(3.0), "{check:?}");
    }

    #[test]
    fn moment_check_is_reproducible() {
        let a = mc_moment_check(2, &[0.3, 0.4], 0.8, false, 50_000, Seed::new(9, 1)).unwrap();
        let b = mc_moment_check(2, &[0.3, 0.4], 0.8, false, 50_000, Seed::new(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(mc_moment_check(2, &[0.3, 0.4], 0.8, false, 9_999, Seed::new(9, 1)).is_err());
    }
}
