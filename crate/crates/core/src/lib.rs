//! Causal discovery and intervention prioritization for survey tables.
//!
//! The pipeline is: [`ingest`] a delimited table against a variable schema,
//! learn a CPDAG with Greedy Equivalence Search ([`ges`]) under a Gaussian
//! BIC ([`score`]), then read the graph for intervention targets
//! ([`effects`]) and compare against associational baselines
//! ([`baselines`]). [`synth`] generates linear-Gaussian ground truth for
//! testing recovery.
//!
//! Data-parallel loops (move scoring, resampling, pairwise correlation) run
//! on rayon when the `parallel` feature is enabled (the default) and fall
//! back to plain iterators otherwise. Results are identical either way.

pub mod baselines;
pub mod effects;
pub mod ges;
pub mod graph;
pub mod ingest;
pub mod par;
pub mod score;
pub mod synth;

pub use graph::{Dag, NodeId, Pdag};
pub use ingest::{Dataset, VariableKind, VariableSpec};
