//! Synthetic knowledge graphs for studying implicit multi-hop reasoning,
//! the graph search entropy of any knowledge graph, and the linear law
//! relating that entropy to the optimal language-model size.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: the triple store, TSV import/export and structural statistics.
//! - [`rules`]: acyclic conjunctive rule sets and the node types they induce.
//! - [`deduction`]: forward chaining, closure and deducibility witnesses.
//! - [`graphgen`]: preferential-attachment growth and train/held-out splitting.
//! - [`corpus`]: random-id corpora, multiple-choice eval sets and vocabularies.
//! - [`entropy`]: maximal-entropy random walk and graph search entropy.
//! - [`scaling`]: optimal-size location and the entropy/size regression.
//! - [`pipeline`]: config-driven commands behind the `kgscale` binary.

pub mod corpus;
pub mod deduction;
pub mod entropy;
pub mod error;
pub mod graph;
pub mod graphgen;
pub mod pipeline;
pub mod rules;
pub mod scaling;

pub use error::{Error, Result};
pub use graph::{EntityId, KnowledgeGraph, Label, RelationId, Triple};
