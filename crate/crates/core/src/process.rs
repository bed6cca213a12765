//! The sequential edge-generation process shared by the samplers and the
//! likelihood evaluator.
//!
//! Every model is driven through [`walk`]: candidate edges are visited in
//! generation order and each one's Bernoulli parameter is computed from the
//! labels and the edges already decided. Samplers decide an edge with the
//! RNG; the likelihood decides it by reading the observed graph. Sharing the
//! walk is what makes a replayed sample reproduce its edge parameters exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::info::edge_moment;
use crate::model::{LabelVector, ModelSpec, Modifier, Predecessors};
use crate::samplers::{cap_simplex, ergm_edge_probs, LatentMatrix, WeightVector};

/// One generated candidate edge with the parameter it was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeDraw {
    pub from: usize,
    pub to: usize,
    pub prob: f64,
    pub present: bool,
}

/// How latent-space models obtain edge probabilities.
#[derive(Debug, Clone, Copy)]
pub enum LatentSource<'a> {
    /// Condition on these latent positions.
    Known(&'a LatentMatrix),
    /// Integrate each edge over its own pair of latents independently
    /// (closed-form per-edge moments, ignoring dependence between edges).
    Surrogate,
}

/// Visits every candidate edge of `spec` on `labels.len()` nodes in
/// generation order, asking `decide` whether it is present.
pub(crate) fn walk<F>(
    spec: &ModelSpec,
    labels: &LabelVector,
    latent: LatentSource<'_>,
    mut decide: F,
) -> Result<Graph>
where
    F: FnMut(&EdgeDraw) -> Result<bool>,
{
    let n = labels.len();
    let mut g = Graph::empty(n, spec.is_directed());
    let order = spec.pair_order(n);
    let mut history: Vec<bool> = Vec::with_capacity(order.len());
    let mut column: Vec<f64> = Vec::new();

    for (t, &(from, to)) in order.iter().enumerate() {
        let prob = match spec {
            ModelSpec::Dpam { .. } | ModelSpec::Dswm { .. } => {
                if from == 0 {
                    column = attachment_column(spec, labels, &g, to)?;
                }
                column[from]
            }
            _ => undirected_prob(spec, labels, latent, &history, t, from, to)?,
        };
        let mut draw = EdgeDraw {
            from,
            to,
            prob,
            present: false,
        };
        draw.present = decide(&draw)?;
        if draw.present {
            g.set_edge(from, to, true);
        }
        history.push(draw.present);
    }
    Ok(g)
}

fn undirected_prob(
    spec: &ModelSpec,
    labels: &LabelVector,
    latent: LatentSource<'_>,
    history: &[bool],
    t: usize,
    i: usize,
    j: usize,
) -> Result<f64> {
    let same = labels.same(i, j);
    let dynamic = |modifier: &Modifier, tau: &Predecessors| modifier.evaluate(&history[tau.range(t)]);
    Ok(match spec {
        ModelSpec::Sbm { p, q } => pick(same, *p, *q),
        ModelSpec::Ergm { beta } => {
            let (p, q) = ergm_edge_probs(*beta);
            pick(same, p, q)
        }
        ModelSpec::Lsm { mu, sigma, .. } => latent_prob(latent, mu, *sigma, same, i, j),
        ModelSpec::Dsbm {
            p,
            q,
            modifier,
            predecessors,
        } => pick(same, *p, *q) * dynamic(modifier, predecessors)?,
        ModelSpec::Dlsm {
            mu,
            sigma,
            modifier,
            predecessors,
            ..
        } => dynamic(modifier, predecessors)? * latent_prob(latent, mu, *sigma, same, i, j),
        ModelSpec::Dpam { .. } | ModelSpec::Dswm { .. } => unreachable!("directed models"),
    })
}

fn pick(same: bool, p: f64, q: f64) -> f64 {
    if same {
        p
    } else {
        q
    }
}

fn latent_prob(
    latent: LatentSource<'_>,
    mu: &[f64],
    sigma: f64,
    same: bool,
    i: usize,
    j: usize,
) -> f64 {
    match latent {
        LatentSource::Known(z) => (-z.squared_distance(i, j)).exp(),
        LatentSource::Surrogate => edge_moment(mu, sigma, same),
    }
}

/// Link probabilities `m·w̃_ji` of every predecessor `j < i` of node `i`.
///
/// Nodes `0..m` receive no edges. Later nodes weight their predecessors,
/// normalize, cap at `1/m` and link to each independently.
pub(crate) fn attachment_column(
    spec: &ModelSpec,
    labels: &LabelVector,
    g: &Graph,
    i: usize,
) -> Result<Vec<f64>> {
    let (m, scores) = match *spec {
        ModelSpec::Dpam { m, s } => {
            if i < m {
                return Ok(vec![0.0; i]);
            }
            // (o_ji + 1)(1[y_i = y_j] s + 1), o_ji = edges from j into nodes before i.
            let scores = (0..i)
                .map(|j| (g.out_degree(j) as f64 + 1.0) * homophily(labels, i, j, s))
                .collect::<Vec<_>>();
            (m, scores)
        }
        ModelSpec::Dswm { m, s, p_mix } => {
            if i < m {
                return Ok(vec![0.0; i]);
            }
            (m, small_world_scores(labels, i, m, s, p_mix))
        }
        _ => unreachable!("attachment column of an undirected model"),
    };
    let capped = cap_simplex(&WeightVector::from_scores(&scores)?, m)?;
    Ok(capped
        .as_slice()
        .iter()
        .map(|w| (m as f64 * w).clamp(0.0, 1.0))
        .collect())
}

fn homophily(labels: &LabelVector, i: usize, j: usize, s: f64) -> f64 {
    if labels.same(i, j) {
        s + 1.0
    } else {
        1.0
    }
}

/// Window `i-m..i` carries mass `p_mix`, older nodes `0..i-m` carry
/// `1 - p_mix`; within each group weights follow homophily. With no older
/// nodes the window carries all the mass.
fn small_world_scores(labels: &LabelVector, i: usize, m: usize, s: f64, p_mix: f64) -> Vec<f64> {
    let boundary = i - m;
    let raw: Vec<f64> = (0..i).map(|j| homophily(labels, i, j, s)).collect();
    let older: f64 = raw[..boundary].iter().sum();
    let recent: f64 = raw[boundary..].iter().sum();
    let (older_mass, recent_mass) = if boundary == 0 { (0.0, 1.0) } else { (1.0 - p_mix, p_mix) };
    raw.iter()
        .enumerate()
        .map(|(j, r)| {
            if j < boundary {
                older_mass * r / older
            } else {
                recent_mass * r / recent
            }
        })
        .collect()
}

/// Log-probability of one Bernoulli outcome with `0·ln 0 = 0`.
pub(crate) fn bernoulli_ln(prob: f64, present: bool) -> f64 {
    let p = if present { prob } else { 1.0 - prob };
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p.ln()
    }
}

/// Replays `g` through the generation process, returning each candidate
/// edge's conditional Bernoulli parameter given the edges before it.
pub fn edge_trace(
    spec: &ModelSpec,
    labels: &LabelVector,
    g: &Graph,
    latent: LatentSource<'_>,
) -> Result<Vec<EdgeDraw>> {
    check_compatible(spec, labels, g)?;
    let mut trace = Vec::new();
    walk(spec, labels, latent, |draw| {
        let present = g.has_edge(draw.from, draw.to);
        trace.push(EdgeDraw { present, ..*draw });
        Ok(present)
    })?;
    Ok(trace)
}

pub(crate) fn check_compatible(spec: &ModelSpec, labels: &LabelVector, g: &Graph) -> Result<()> {
    if labels.len() != g.n() {
        return Err(Error::LengthMismatch {
            left: g.n(),
            right: labels.len(),
        });
    }
    if spec.is_directed() != g.is_directed() {
        return Err(Error::InvalidGraph(format!(
            "{} expects a {} graph",
            spec.kind(),
            if spec.is_directed() { "directed" } else { "undirected" }
        )));
    }
    spec.validate(g.n())?;
    if let Some((a, b)) = g.edges().into_iter().find(|&(a, b)| g.is_directed() && a > b) {
        return Err(Error::ImpossibleObservation(format!(
            "backward edge {a}->{b} cannot be generated by {}",
            spec.kind()
        )));
    }
    Ok(())
}
