//! Detection of deregulated genes from expression data and a reference
//! regulatory network.
//!
//! The crate implements a generative model in which every gene carries a
//! hidden ternary expression status. Regulator statuses are drawn from a
//! shared prior; each target follows the deterministic regulation logic of
//! its co-activator and co-inhibitor sets unless a per-sample deregulation
//! event detaches it, in which case it takes a uniformly random wrong status.
//! Observed expression is Gaussian around a per-status mean.
//!
//! Model fitting runs EM: the E-step compiles one factor graph per sample and
//! extracts posterior marginals with sum-product belief propagation, the
//! M-step updates all parameters in closed form. The posterior probability
//! that a target is deregulated in a sample is the deregulation score; scores
//! feed precision-recall evaluation and posterior-based FDR thresholding.
//!
//! Module map:
//! - [`model`]: domain types and the deterministic regulation logic
//! - [`factorgraph`]: generic discrete sum-product engine
//! - [`compile`]: per-sample factor-graph construction
//! - [`em`]: E-step, M-step, fit driver and scoring
//! - [`simulate`]: generative sampling and random network generation
//! - [`eval`]: precision-recall curves and FDR selection
//! - [`oracle`]: brute-force exact inference for small instances

pub mod compile;
pub mod em;
pub mod error;
pub mod eval;
pub mod factorgraph;
pub mod model;
pub mod oracle;
pub mod simulate;

pub use compile::{build_sample_graph, hidden_variable_census, CompiledSampleGraph, NetworkCensus};
pub use em::{e_step, fit, m_step, score, FitResult, FitSettings, SampleMarginals};
pub use error::{Error, Result};
pub use eval::{estimate_fdr, pr_curve, select_at_fdr, FdrSelection, PrCurve};
pub use factorgraph::{FactorGraph, MarginalSet, VarId};
pub use model::{
    collective_state, combine, truth_table, DeregulationMask, DeregulationScores,
    ExpressionMatrix, ModelParams, RegulatoryNetwork, TernaryState, ValidationReport,
};
pub use oracle::{exact_expected_complete_loglik, exact_marginals, ExactMarginals};
pub use simulate::{random_network, simulate, GroundTruth};
