//! Deterministic simulation of temporal memory dynamics.
//!
//! Propositions are realized, decay along exponential forgetting curves,
//! and are reactivated by triggering contexts. Recall spreads through a
//! hierarchy of nested contexts, latencies are shaped by relations,
//! feedback, Bayesian reinforcement and environmental facilitation, and
//! chain organization is scored with entropy-based metrics.
//!
//! The crate is organized around a validated [`scenario::ScenarioConfig`]:
//!
//! - [`temporal`] — always/eventually/next over linear and branching traces,
//!   and machine checks of the two operator theorems.
//! - [`decay`] — forgetting curves, reactivation, resilience accumulation.
//! - [`hierarchy`] — context containment DAG, entanglement, recall
//!   propagation along containment paths.
//! - [`recall`] — the recall-latency pipeline and temporal hierarchies.
//! - [`influence`] — influence networks, recursive path influence, feedback.
//! - [`bayes`] — Bayesian recall updating and iterated reinforcement.
//! - [`metrics`] — chain entropy, recall efficiency, entropy–latency report.
//! - [`engine`] — the deterministic discrete-event simulation loop.

pub mod bayes;
pub mod decay;
pub mod engine;
pub mod hierarchy;
pub mod ids;
pub mod influence;
pub mod metrics;
pub mod recall;
pub mod scenario;
pub mod temporal;

pub use ids::{BranchId, ChainId, ContextId, PropId};
pub use scenario::{MemoryState, Phase, Proposition, ScenarioConfig, ValidationReport};
