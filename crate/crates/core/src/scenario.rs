//! Scenario vocabulary: propositions, memory states, and the JSON
//! configuration that parameterizes every formula in the library.
//!
//! A scenario file is a UTF-8 JSON document with top-level keys
//! `propositions`, `contexts`, `relations`, `params`, `events`,
//! `horizon`, `dt`, and `seed`; unknown keys are rejected. Validation is
//! report-style: [`ScenarioConfig::validate`] returns every violation it
//! finds, each naming the offending field, and callers treat a non-empty
//! report as fatal.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{ContextHierarchy, PropagationMode, RelationMatrix};
use crate::ids::{BranchId, ChainId, ContextId, PropId};
use crate::metrics::OptimalSign;
use crate::recall::Modifier;
use crate::temporal::{BranchingTrace, Trace, TruthValue};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("unknown proposition `{0}`")]
    UnknownProposition(PropId),
}

/// A proposition with its decay rate, base recall latency, and initial
/// amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proposition {
    pub id: PropId,
    /// Decay constant λ, per time unit.
    #[serde(default)]
    pub decay_constant: f64,
    /// Base recall latency T_B, in time units.
    #[serde(default = "default_base_latency")]
    pub base_latency: f64,
    /// Amplitude of the decayed state, in (0, 1].
    #[serde(default = "default_amplitude")]
    pub initial_amplitude: f64,
}

fn default_base_latency() -> f64 {
    1.0
}

fn default_amplitude() -> f64 {
    1.0
}

/// The phase of a proposition's memory state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Realized,
    Decayed,
    Unresolved,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Realized => "realized",
            Phase::Decayed => "decayed",
            Phase::Unresolved => "unresolved",
        })
    }
}

/// Per-proposition temporal state: realized during `[t_r, t_f)`, decayed
/// from `t_f` on, unresolved before the first realization.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryState {
    pub phase: Phase,
    pub t_r: Option<f64>,
    pub t_f: Option<f64>,
    /// Time of the most recent decay-curve reset.
    pub last_reset: Option<f64>,
}

impl MemoryState {
    pub fn unresolved() -> Self {
        Self {
            phase: Phase::Unresolved,
            t_r: None,
            t_f: None,
            last_reset: None,
        }
    }

    pub fn realized_at(t: f64) -> Self {
        Self {
            phase: Phase::Realized,
            t_r: Some(t),
            t_f: None,
            last_reset: Some(t),
        }
    }
}

/// A context definition: members plus the contexts directly containing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextDef {
    pub id: ContextId,
    #[serde(default)]
    pub members: Vec<PropId>,
    #[serde(default)]
    pub within: Vec<ContextId>,
}

/// One relation-matrix entry for an unordered proposition pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDef {
    pub a: PropId,
    pub b: PropId,
    pub r: f64,
    /// Universal relationship strength used for cross-chain links.
    #[serde(default)]
    pub r_universal: f64,
}

/// A named memory chain with an optional explicit recall distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDef {
    pub id: ChainId,
    pub members: Vec<PropId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<f64>>,
}

/// A likelihood table entry: `p = P(observed | given)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodDef {
    pub observed: PropId,
    pub given: PropId,
    pub p: f64,
}

/// Priors and likelihoods for Bayesian updating. Absent priors default to
/// uniform; absent likelihoods default to the relation matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesParams {
    #[serde(default)]
    pub priors: IndexMap<PropId, f64>,
    #[serde(default)]
    pub likelihoods: Vec<LikelihoodDef>,
}

/// The environment ℰ: a positive scalar or a piecewise-constant schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvironmentSpec {
    Constant(f64),
    Schedule(Vec<EnvPoint>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvPoint {
    pub t: f64,
    pub value: f64,
}

impl EnvironmentSpec {
    /// The environment in force at time `t`: the latest schedule point at
    /// or before `t`, or the first point before the schedule begins.
    pub fn at(&self, t: f64) -> f64 {
        match self {
            EnvironmentSpec::Constant(v) => *v,
            EnvironmentSpec::Schedule(points) => points
                .iter()
                .rev()
                .find(|p| p.t <= t)
                .or_else(|| points.first())
                .map_or(1.0, |p| p.value),
        }
    }
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        EnvironmentSpec::Constant(1.0)
    }
}

/// A branch's measurement-outcome trace (steps use the scenario `dt`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDef {
    pub prefix: Vec<TruthValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<Vec<TruthValue>>,
}

/// Thresholds, coefficients, and engine switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Propagation threshold τ, in [0, 1].
    pub tau: f64,
    /// Entanglement threshold τ_e, in [0, 1].
    pub tau_e: f64,
    /// Chain-causality threshold τ_c, in [0, 1].
    pub tau_c: f64,
    /// Temporal-hierarchy latency bound ε_h, in time units.
    pub epsilon_h: f64,
    /// Feedback coefficient α_fb ≥ 0.
    pub alpha_fb: f64,
    /// Resilience decay constant α_res ≥ 0.
    pub alpha_res: f64,
    /// Entropy scaling parameter β ≥ 0.
    pub beta: f64,
    /// Path-length decay rate λ_path ≥ 0.
    pub lambda_path: f64,
    /// Cross-chain subtlety factor ε_cross, at most 0.1.
    pub epsilon_cross: f64,
    /// Resilience threshold above which decay counts as negligible.
    pub tau_res: f64,
    /// Environmental facilitation ℰ > 0.
    pub environment: EnvironmentSpec,
    /// Latency modifiers the engine applies when scheduling transitions.
    pub modifiers: Vec<Modifier>,
    /// Sample transition times from the exponential law instead of firing
    /// deterministically at T_R.
    pub stochastic: bool,
    /// Resolve simultaneous-influence latencies by fixed-point iteration.
    pub fixed_point: bool,
    /// Cap on enumerated paths for propagation and recursive influence.
    pub path_cap: usize,
    /// Cap on cascaded recall depth.
    pub cascade_depth: usize,
    /// Duration of a realization window before decay begins.
    pub realization_duration: f64,
    pub propagation_mode: PropagationMode,
    pub optimal_sign: OptimalSign,
    /// Apply threshold propagation across the context DAG.
    pub enable_propagation: bool,
    /// Schedule latency-based transitions for related propositions.
    pub enable_scheduling: bool,
    pub chains: Vec<ChainDef>,
    pub bayes: BayesParams,
    /// Branch measurement tables for `measure` events.
    pub branches: IndexMap<BranchId, BranchDef>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            tau: 0.5,
            tau_e: 0.8,
            tau_c: 0.5,
            epsilon_h: 1.0,
            alpha_fb: 0.5,
            alpha_res: 1.0,
            beta: 1.0,
            lambda_path: 0.0,
            epsilon_cross: 0.01,
            tau_res: 100.0,
            environment: EnvironmentSpec::default(),
            modifiers: Vec::new(),
            stochastic: false,
            fixed_point: false,
            path_cap: 1_000_000,
            cascade_depth: 32,
            realization_duration: 1.0,
            propagation_mode: PropagationMode::Literal,
            optimal_sign: OptimalSign::Literal,
            enable_propagation: true,
            enable_scheduling: true,
            chains: Vec::new(),
            bayes: BayesParams::default(),
            branches: IndexMap::new(),
        }
    }
}

/// A timestamped scenario event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEvent", into = "RawEvent")]
pub struct EventSpec {
    pub time: f64,
    pub kind: EventKindSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKindSpec {
    /// An external recall of `target`.
    Recall { target: PropId },
    /// A reactivation trigger from `context` onto `target`.
    Trigger { context: ContextId, target: PropId },
    /// A change of the environmental facilitation factor.
    Environment { value: f64 },
    /// A measurement of `branch` at step index `step`.
    Measure { branch: BranchId, step: usize },
}

/// Wire form of an event: `kind` selects the variant and the remaining
/// fields must match it exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    time: f64,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<PropId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<ContextId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    branch: Option<BranchId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<usize>,
}

impl From<EventSpec> for RawEvent {
    fn from(event: EventSpec) -> Self {
        let mut raw = RawEvent {
            time: event.time,
            kind: String::new(),
            target: None,
            context: None,
            value: None,
            branch: None,
            step: None,
        };
        match event.kind {
            EventKindSpec::Recall { target } => {
                raw.kind = "recall".to_owned();
                raw.target = Some(target);
            }
            EventKindSpec::Trigger { context, target } => {
                raw.kind = "trigger".to_owned();
                raw.context = Some(context);
                raw.target = Some(target);
            }
            EventKindSpec::Environment { value } => {
                raw.kind = "environment".to_owned();
                raw.value = Some(value);
            }
            EventKindSpec::Measure { branch, step } => {
                raw.kind = "measure".to_owned();
                raw.branch = Some(branch);
                raw.step = Some(step);
            }
        }
        raw
    }
}

impl TryFrom<RawEvent> for EventSpec {
    type Error = String;

    fn try_from(raw: RawEvent) -> Result<Self, Self::Error> {
        fn require<T>(field: Option<T>, name: &str, kind: &str) -> Result<T, String> {
            field.ok_or_else(|| format!("event kind `{kind}` requires field `{name}`"))
        }
        fn forbid<T>(field: &Option<T>, name: &str, kind: &str) -> Result<(), String> {
            if field.is_some() {
                Err(format!("event kind `{kind}` does not take field `{name}`"))
            } else {
                Ok(())
            }
        }
        let kind = match raw.kind.as_str() {
            "recall" => {
                forbid(&raw.context, "context", "recall")?;
                forbid(&raw.value, "value", "recall")?;
                forbid(&raw.branch, "branch", "recall")?;
                forbid(&raw.step, "step", "recall")?;
                EventKindSpec::Recall {
                    target: require(raw.target, "target", "recall")?,
                }
            }
            "trigger" => {
                forbid(&raw.value, "value", "trigger")?;
                forbid(&raw.branch, "branch", "trigger")?;
                forbid(&raw.step, "step", "trigger")?;
                EventKindSpec::Trigger {
                    context: require(raw.context, "context", "trigger")?,
                    target: require(raw.target, "target", "trigger")?,
                }
            }
            "environment" => {
                forbid(&raw.target, "target", "environment")?;
                forbid(&raw.context, "context", "environment")?;
                forbid(&raw.branch, "branch", "environment")?;
                forbid(&raw.step, "step", "environment")?;
                EventKindSpec::Environment {
                    value: require(raw.value, "value", "environment")?,
                }
            }
            "measure" => {
                forbid(&raw.target, "target", "measure")?;
                forbid(&raw.context, "context", "measure")?;
                forbid(&raw.value, "value", "measure")?;
                EventKindSpec::Measure {
                    branch: require(raw.branch, "branch", "measure")?,
                    step: require(raw.step, "step", "measure")?,
                }
            }
            other => {
                return Err(format!(
                    "unknown event kind `{other}`; expected recall|trigger|environment|measure"
                ))
            }
        };
        Ok(EventSpec {
            time: raw.time,
            kind,
        })
    }
}

/// A complete scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub propositions: Vec<Proposition>,
    #[serde(default)]
    pub contexts: Vec<ContextDef>,
    #[serde(default)]
    pub relations: Vec<RelationDef>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

/// One validation violation, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Report-style validation result; empty means valid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

fn in_unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    fn prop_ids(&self) -> IndexSet<&PropId> {
        self.propositions.iter().map(|p| &p.id).collect()
    }

    /// Checks every invariant and the referential integrity of relations,
    /// contexts, chains, events, and Bayesian tables.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        let mut seen_props: IndexSet<&PropId> = IndexSet::new();
        for (i, prop) in self.propositions.iter().enumerate() {
            let field = format!("propositions[{i}]");
            if prop.id.as_str().is_empty() {
                report.push(format!("{field}.id"), "id must be non-empty");
            }
            if !seen_props.insert(&prop.id) {
                report.push(
                    format!("{field}.id"),
                    format!("duplicate proposition id `{}`", prop.id),
                );
            }
            if !(prop.decay_constant >= 0.0) || !prop.decay_constant.is_finite() {
                report.push(
                    format!("{field}.decay_constant"),
                    "decay constant must be finite and >= 0",
                );
            }
            if !(prop.base_latency > 0.0) || !prop.base_latency.is_finite() {
                report.push(
                    format!("{field}.base_latency"),
                    "base latency must be finite and > 0",
                );
            }
            if !(prop.initial_amplitude > 0.0 && prop.initial_amplitude <= 1.0) {
                report.push(
                    format!("{field}.initial_amplitude"),
                    "amplitude must lie in (0, 1]",
                );
            }
        }
        let props = self.prop_ids();

        let mut seen_pairs: BTreeSet<(PropId, PropId)> = BTreeSet::new();
        for (i, rel) in self.relations.iter().enumerate() {
            let field = format!("relations[{i}]");
            for (side, id) in [("a", &rel.a), ("b", &rel.b)] {
                if !props.contains(id) {
                    report.push(
                        format!("{field}.{side}"),
                        format!("unknown proposition `{id}`"),
                    );
                }
            }
            if rel.a == rel.b {
                report.push(
                    format!("{field}.b"),
                    "self-relation is fixed at 1 and cannot be declared",
                );
            }
            let key = if rel.a <= rel.b {
                (rel.a.clone(), rel.b.clone())
            } else {
                (rel.b.clone(), rel.a.clone())
            };
            if !seen_pairs.insert(key) {
                report.push(
                    format!("{field}"),
                    format!("duplicate relation entry for `{}`/`{}`", rel.a, rel.b),
                );
            }
            if !in_unit_interval(rel.r) {
                report.push(format!("{field}.r"), "relation out of [0,1]");
            }
            if !in_unit_interval(rel.r_universal) {
                report.push(format!("{field}.r_universal"), "relation out of [0,1]");
            }
        }

        let mut seen_contexts: IndexSet<&ContextId> = IndexSet::new();
        for (i, ctx) in self.contexts.iter().enumerate() {
            let field = format!("contexts[{i}]");
            if !seen_contexts.insert(&ctx.id) {
                report.push(
                    format!("{field}.id"),
                    format!("duplicate context id `{}`", ctx.id),
                );
            }
            for member in &ctx.members {
                if !props.contains(member) {
                    report.push(
                        format!("{field}.members"),
                        format!("unknown proposition `{member}`"),
                    );
                }
            }
            for outer in &ctx.within {
                if !self.contexts.iter().any(|c| &c.id == outer) {
                    report.push(
                        format!("{field}.within"),
                        format!("unknown context `{outer}`"),
                    );
                }
            }
        }
        // Structural checks need a well-formed hierarchy.
        if report.is_valid() {
            let hierarchy = self.hierarchy();
            if !hierarchy.is_acyclic() {
                report.push("contexts", "containment edges must form a DAG");
            }
            for (inner, outer, member) in hierarchy.subset_violations() {
                report.push(
                    "contexts",
                    format!("`{inner}` ⊆ `{outer}` fails: member `{member}` missing from `{outer}`"),
                );
            }
        }

        self.validate_params(&props, &mut report);
        self.validate_events(&props, &mut report);

        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            report.push("horizon", "horizon must be finite and >= 0");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            report.push("dt", "dt must be positive");
        }

        report
    }

    fn validate_params(&self, props: &IndexSet<&PropId>, report: &mut ValidationReport) {
        let p = &self.params;
        for (name, value) in [
            ("params.tau", p.tau),
            ("params.tau_e", p.tau_e),
            ("params.tau_c", p.tau_c),
        ] {
            if !in_unit_interval(value) {
                report.push(name, "threshold out of [0,1]");
            }
        }
        if !(p.epsilon_h >= 0.0) || !p.epsilon_h.is_finite() {
            report.push("params.epsilon_h", "latency bound must be finite and >= 0");
        }
        for (name, value) in [
            ("params.alpha_fb", p.alpha_fb),
            ("params.alpha_res", p.alpha_res),
            ("params.beta", p.beta),
            ("params.lambda_path", p.lambda_path),
            ("params.tau_res", p.tau_res),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                report.push(name, "coefficient must be finite and >= 0");
            }
        }
        if !(p.epsilon_cross >= 0.0 && p.epsilon_cross <= 0.1) {
            report.push(
                "params.epsilon_cross",
                "cross-chain factor must lie in [0, 0.1]",
            );
        }
        if !(p.realization_duration > 0.0) || !p.realization_duration.is_finite() {
            report.push(
                "params.realization_duration",
                "realization duration must be positive",
            );
        }
        match &p.environment {
            EnvironmentSpec::Constant(v) => {
                if !(*v > 0.0) || !v.is_finite() {
                    report.push("params.environment", "environment must be positive");
                }
            }
            EnvironmentSpec::Schedule(points) => {
                if points.is_empty() {
                    report.push("params.environment", "schedule must be non-empty");
                }
                for (i, point) in points.iter().enumerate() {
                    if !(point.value > 0.0) || !point.value.is_finite() {
                        report.push(
                            format!("params.environment[{i}].value"),
                            "environment must be positive",
                        );
                    }
                    if !point.t.is_finite() {
                        report.push(
                            format!("params.environment[{i}].t"),
                            "schedule time must be finite",
                        );
                    }
                    if i > 0 && point.t <= points[i - 1].t {
                        report.push(
                            format!("params.environment[{i}].t"),
                            "schedule times must be strictly ascending",
                        );
                    }
                }
            }
        }

        let mut assigned: IndexSet<&PropId> = IndexSet::new();
        let mut seen_chains: IndexSet<&ChainId> = IndexSet::new();
        for (i, chain) in p.chains.iter().enumerate() {
            let field = format!("params.chains[{i}]");
            if !seen_chains.insert(&chain.id) {
                report.push(
                    format!("{field}.id"),
                    format!("duplicate chain id `{}`", chain.id),
                );
            }
            if chain.members.is_empty() {
                report.push(format!("{field}.members"), "chain must be non-empty");
            }
            for member in &chain.members {
                if !props.contains(member) {
                    report.push(
                        format!("{field}.members"),
                        format!("unknown proposition `{member}`"),
                    );
                } else if !assigned.insert(member) {
                    report.push(
                        format!("{field}.members"),
                        format!("proposition `{member}` assigned to more than one chain"),
                    );
                }
            }
            if let Some(dist) = &chain.distribution {
                if dist.len() != chain.members.len() {
                    report.push(
                        format!("{field}.distribution"),
                        "distribution length must match the member count",
                    );
                } else {
                    let sum: f64 = dist.iter().sum();
                    if dist.iter().any(|&x| !in_unit_interval(x)) || (sum - 1.0).abs() > 1e-9 {
                        report.push(
                            format!("{field}.distribution"),
                            "distribution entries must lie in [0,1] and sum to 1",
                        );
                    }
                }
            }
        }

        for (id, prior) in &p.bayes.priors {
            if !props.contains(id) {
                report.push("params.bayes.priors", format!("unknown proposition `{id}`"));
            }
            if !in_unit_interval(*prior) {
                report.push(
                    "params.bayes.priors",
                    format!("prior for `{id}` out of [0,1]"),
                );
            }
        }
        for (i, like) in p.bayes.likelihoods.iter().enumerate() {
            let field = format!("params.bayes.likelihoods[{i}]");
            for (side, id) in [("observed", &like.observed), ("given", &like.given)] {
                if !props.contains(id) {
                    report.push(
                        format!("{field}.{side}"),
                        format!("unknown proposition `{id}`"),
                    );
                }
            }
            if !in_unit_interval(like.p) {
                report.push(format!("{field}.p"), "likelihood out of [0,1]");
            }
        }

        for (id, branch) in &p.branches {
            if branch.prefix.is_empty() && branch.period.as_ref().is_none_or(Vec::is_empty) {
                report.push(
                    format!("params.branches.{id}"),
                    "branch trace must have at least one step",
                );
            }
            if branch.period.as_ref().is_some_and(Vec::is_empty) {
                report.push(
                    format!("params.branches.{id}"),
                    "period must be non-empty when present",
                );
            }
        }
    }

    fn validate_events(&self, props: &IndexSet<&PropId>, report: &mut ValidationReport) {
        for (i, event) in self.events.iter().enumerate() {
            let field = format!("events[{i}]");
            if !(event.time >= 0.0) || !event.time.is_finite() {
                report.push(format!("{field}.time"), "event time must be finite and >= 0");
            }
            match &event.kind {
                EventKindSpec::Recall { target } => {
                    if !props.contains(target) {
                        report.push(
                            format!("{field}.target"),
                            format!("unknown proposition `{target}`"),
                        );
                    }
                }
                EventKindSpec::Trigger { context, target } => {
                    if !self.contexts.iter().any(|c| &c.id == context) {
                        report.push(
                            format!("{field}.context"),
                            format!("unknown context `{context}`"),
                        );
                    }
                    if !props.contains(target) {
                        report.push(
                            format!("{field}.target"),
                            format!("unknown proposition `{target}`"),
                        );
                    }
                }
                EventKindSpec::Environment { value } => {
                    if !(*value > 0.0) || !value.is_finite() {
                        report.push(format!("{field}.value"), "environment must be positive");
                    }
                }
                EventKindSpec::Measure { branch, step: _ } => {
                    if !self.params.branches.contains_key(branch) {
                        report.push(
                            format!("{field}.branch"),
                            format!("unknown branch `{branch}`"),
                        );
                    }
                }
            }
        }
    }

    /// The proposition registry, in declaration order.
    pub fn registry(&self) -> PropositionRegistry {
        PropositionRegistry {
            props: self
                .propositions
                .iter()
                .map(|p| (p.id.clone(), p.clone()))
                .collect(),
        }
    }

    pub fn relation_matrix(&self) -> RelationMatrix {
        let mut matrix = RelationMatrix::new();
        for rel in &self.relations {
            matrix.insert(&rel.a, &rel.b, rel.r, rel.r_universal);
        }
        matrix
    }

    /// The context hierarchy. Call only on a validated config: unknown
    /// containment targets are skipped here, validation reports them.
    pub fn hierarchy(&self) -> ContextHierarchy {
        let mut hierarchy = ContextHierarchy::new();
        for ctx in &self.contexts {
            hierarchy.add_context(ctx.id.clone(), ctx.members.iter().cloned());
        }
        for ctx in &self.contexts {
            for outer in &ctx.within {
                let _ = hierarchy.add_containment(&ctx.id, outer);
            }
        }
        hierarchy
    }

    /// The branch measurement table as a branching trace over the
    /// scenario's `dt`.
    pub fn branching_trace(&self) -> BranchingTrace {
        self.params
            .branches
            .iter()
            .map(|(id, def)| {
                (
                    id.clone(),
                    Trace {
                        prefix: def.prefix.clone(),
                        period: def.period.clone(),
                        dt: self.dt,
                    },
                )
            })
            .collect()
    }
}

/// Registry of validated propositions; lookup is total over registered
/// ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PropositionRegistry {
    props: IndexMap<PropId, Proposition>,
}

impl PropositionRegistry {
    pub fn lookup(&self, id: &PropId) -> Result<&Proposition, ScenarioError> {
        self.props
            .get(id)
            .ok_or_else(|| ScenarioError::UnknownProposition(id.clone()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &PropId> {
        self.props.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PropId, &Proposition)> {
        self.props.iter()
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }
}
