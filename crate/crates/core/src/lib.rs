//! Simulation and verification tools for two-community network models and
//! their information-theoretic limits on label recovery.
//!
//! Seven generative models are covered: stochastic block, exponential random
//! graph, latent space, their dynamic variants, preferential attachment and
//! small world. For each there are samplers, non-recoverability conditions,
//! exact small-graph KL/mutual information, and brute-force MAP recovery.

pub mod error;
pub mod graph;
pub mod harness;
pub mod info;
pub mod model;
pub mod process;
pub mod recovery;
pub mod samplers;
pub mod seed;
pub mod thresholds;

pub use error::{Error, Result};
pub use graph::{deserialize_graph, serialize_graph, Graph};
pub use harness::{run_sweep, ExperimentConfig, SweepResult};
pub use info::{
    enumerate_distribution, fano_lower_bound, kl_graph, lsm_edge_moment, mc_moment_check, mi_pairwise_upper,
    mi_plugin, GraphDistribution, MiEstimate,
};
pub use model::{LabelVector, ModelKind, ModelSpec, Modifier, Predecessors};
pub use process::{edge_trace, EdgeDraw, LatentSource};
pub use recovery::{exact_error, flip_error, log_likelihood, map_recover, LikelihoodMode, RecoveryResult};
pub use samplers::{cap_simplex, sample, sample_labels, LatentMatrix, Sample, WeightVector};
pub use seed::Seed;
pub use thresholds::{condition, kl_bernoulli, chi2_bound, ThresholdReport};
