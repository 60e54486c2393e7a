//! Bayesian multilayer exponential-family random graph models for ordinal
//! weighted networks.
//!
//! A weighted network with ordinal weights `1..=W` is decomposed into `W`
//! nested binary layers (layer `w` holds dyads with weight at least `w`).
//! Each layer is modelled by an ERGM conditioned on the layer below, and the
//! per-layer parameters share a Normal-Inverse-Wishart hierarchy. Inference
//! uses an approximate exchange algorithm with adaptive-direction proposals
//! across parallel chains.

mod adjacency;
pub mod error;
pub mod fixtures;
pub mod gof;
pub mod infer;
pub mod io;
pub mod network;
pub mod niw;
pub mod sim;
pub mod stats;
pub mod summary;

pub use error::{Error, Result};
pub use gof::{posterior_predictive_gof, summarize_posterior, weighted_degree, GofReport, PosteriorSummary};
pub use infer::{
    exchange_update_layer, run_inference, ChainState, Draw, ExchangeModel, Init, PosteriorSamples, Proposal, RunConfig,
};
pub use network::{decompose, ordinalize, recompose, BinaryLayer, LayerStack, NodeAttributes, WeightedNetwork};
pub use niw::{niw_full_conditional, sample_hyper, HyperState, NiwParams, NiwPrior};
pub use sim::{phi_from_theta, simulate_layer, simulate_stack, weighted_edge_logodds, LayerParams, SimControl};
pub use stats::{
    change_statistics, eval_statistics, transition_statistics, ModelSpec, StatKind, StatisticDescriptor,
};
