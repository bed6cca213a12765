//! Generative procedures for the seven network models.
//!
//! All samplers take the RNG explicitly; use [`Seed::rng`](crate::Seed::rng)
//! for reproducible streams. Edges are drawn in generation order (see
//! [`ModelSpec::pair_order`]), one uniform per non-degenerate edge.

pub(crate) mod latent;
mod simplex;

pub use latent::{sample_latents, LatentMatrix};
pub use simplex::{cap_simplex, WeightVector};

use rand::Rng;

use crate::error::Result;
use crate::graph::Graph;
use crate::model::{LabelVector, ModelSpec, Modifier, Predecessors};
use crate::process::{walk, EdgeDraw, LatentSource};

/// A sampled graph with its latent positions (latent models only) and the
/// sequence of edge draws that produced it.
#[derive(Debug, Clone)]
pub struct Sample {
    pub graph: Graph,
    pub latent: Option<LatentMatrix>,
    pub trace: Vec<EdgeDraw>,
}

/// I.i.d. uniform `±1` labels.
pub fn sample_labels<R: Rng + ?Sized>(n: usize, rng: &mut R) -> LabelVector {
    assert!(n >= 2, "need at least 2 nodes");
    LabelVector::new((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
        .expect("labels are ±1 by construction")
}

/// Bernoulli draw; parameters 0 and 1 are decided without consuming randomness.
pub(crate) fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.gen::<f64>() < p
    }
}

/// Samples a graph from `spec` given the node labels.
pub fn sample<R: Rng + ?Sized>(spec: &ModelSpec, labels: &LabelVector, rng: &mut R) -> Result<Sample> {
    spec.validate(labels.len())?;
    let latent = match spec {
        ModelSpec::Lsm { mu, sigma, .. } | ModelSpec::Dlsm { mu, sigma, .. } => {
            Some(sample_latents(labels, mu, *sigma, rng))
        }
        _ => None,
    };
    let source = latent
        .as_ref()
        .map_or(LatentSource::Surrogate, LatentSource::Known);
    let mut trace = Vec::with_capacity(spec.pair_order(labels.len()).len());
    let graph = walk(spec, labels, source, |draw| {
        let present = bernoulli(rng, draw.prob);
        trace.push(EdgeDraw { present, ..*draw });
        Ok(present)
    })?;
    Ok(Sample {
        graph,
        latent,
        trace,
    })
}

pub fn sample_sbm<R: Rng + ?Sized>(p: f64, q: f64, labels: &LabelVector, rng: &mut R) -> Result<Graph> {
    Ok(sample(&ModelSpec::Sbm { p, q }, labels, rng)?.graph)
}

/// Per-edge parameters `(p_same, q_cross)` of the edge-agreement ERGM,
/// which factorizes into independent logistic edges.
pub fn ergm_edge_probs(beta: f64) -> (f64, f64) {
    let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
    (logistic(beta), logistic(-beta))
}

pub fn sample_ergm<R: Rng + ?Sized>(beta: f64, labels: &LabelVector, rng: &mut R) -> Result<Graph> {
    Ok(sample(&ModelSpec::Ergm { beta }, labels, rng)?.graph)
}

pub fn sample_lsm<R: Rng + ?Sized>(
    mu: &[f64],
    sigma: f64,
    labels: &LabelVector,
    rng: &mut R,
) -> Result<(Graph, LatentMatrix)> {
    let spec = ModelSpec::Lsm {
        d: mu.len(),
        mu: mu.to_vec(),
        sigma,
    };
    let s = sample(&spec, labels, rng)?;
    Ok((s.graph, s.latent.expect("latent models return latents")))
}

/// The shifted formulation of the latent space model: `x_i ~ N(0, σ² I)`,
/// same-label pairs link with `exp(-|x_i - x_j|²)` and cross pairs with
/// `exp(-|x_i - x_j + 2 y_i μ|²)`. Returns the `x` positions.
pub fn sample_modified_lsm<R: Rng + ?Sized>(
    mu: &[f64],
    sigma: f64,
    labels: &LabelVector,
    rng: &mut R,
) -> Result<(Graph, LatentMatrix)> {
    let n = labels.len();
    ModelSpec::Lsm {
        d: mu.len(),
        mu: mu.to_vec(),
        sigma,
    }
    .validate(n)?;
    let x = latent::gaussian_rows(rng, n, mu.len(), sigma, |_, _| 0.0);
    let mut g = Graph::empty(n, false);
    for i in 0..n {
        for j in i + 1..n {
            let shift = if labels.same(i, j) { 0.0 } else { 2.0 * f64::from(labels.get(i)) };
            let dist2: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .zip(mu)
                .map(|((a, b), m)| {
                    let v = a - b + shift * m;
                    v * v
                })
                .sum();
            if bernoulli(rng, (-dist2).exp()) {
                g.set_edge(i, j, true);
            }
        }
    }
    Ok((g, x))
}

pub fn sample_dsbm<R: Rng + ?Sized>(
    p: f64,
    q: f64,
    modifier: &Modifier,
    predecessors: Predecessors,
    labels: &LabelVector,
    rng: &mut R,
) -> Result<Graph> {
    let spec = ModelSpec::Dsbm {
        p,
        q,
        modifier: modifier.clone(),
        predecessors,
    };
    Ok(sample(&spec, labels, rng)?.graph)
}

pub fn sample_dlsm<R: Rng + ?Sized>(
    mu: &[f64],
    sigma: f64,
    modifier: &Modifier,
    predecessors: Predecessors,
    labels: &LabelVector,
    rng: &mut R,
) -> Result<(Graph, LatentMatrix)> {
    let spec = ModelSpec::Dlsm {
        d: mu.len(),
        mu: mu.to_vec(),
        sigma,
        modifier: modifier.clone(),
        predecessors,
    };
    let s = sample(&spec, labels, rng)?;
    Ok((s.graph, s.latent.expect("latent models return latents")))
}

pub fn sample_dpam<R: Rng + ?Sized>(m: usize, s: f64, labels: &LabelVector, rng: &mut R) -> Result<Graph> {
    Ok(sample(&ModelSpec::Dpam { m, s }, labels, rng)?.graph)
}

pub fn sample_dswm<R: Rng + ?Sized>(
    m: usize,
    s: f64,
    p_mix: f64,
    labels: &LabelVector,
    rng: &mut R,
) -> Result<Graph> {
    Ok(sample(&ModelSpec::Dswm { m, s, p_mix }, labels, rng)?.graph)
}
