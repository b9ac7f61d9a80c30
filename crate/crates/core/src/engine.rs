//! Deterministic discrete-event simulation.
//!
//! Events are processed in `(time, sequence)` order from a priority
//! queue. Every external recall realizes its target, credits the target's
//! resilience, resets the decay curves of related decayed propositions,
//! schedules latency transitions for related unrealized propositions
//! through the configured modifier pipeline, and fires threshold
//! propagation across the context DAG. Propagated and scheduled recalls
//! are recall events themselves and cascade up to the configured depth.
//! Identical config and seed yield a bit-identical event log.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use indexmap::{IndexMap, IndexSet};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::bayes::{posterior_distribution, BayesError, BeliefTable};
use crate::decay::{
    adjusted_decay_rate, reactivate, DecayCurve, DecayError, ResilienceAccumulator,
};
use crate::hierarchy::{ContextHierarchy, HierarchyError, RelationMatrix};
use crate::ids::{ChainId, ContextId, PropId};
use crate::influence::InfluenceError;
use crate::metrics::{
    entropy_latency_report, optimal_distribution, ChainDistribution, MetricsError,
};
use crate::recall::{resolve_latency, LatencyQuery, LatencyInputs, Modifier, RecallError};
use crate::scenario::{
    EventKindSpec, EventSpec, MemoryState, Phase, PropositionRegistry, ScenarioConfig,
    ValidationReport,
};
use crate::temporal::{BranchingTrace, TruthValue};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("scenario validation failed:\n{0}")]
    ValidationFailed(ValidationReport),
    #[error("event at t={event_time} precedes the clock at t={clock}")]
    ClockRegression { event_time: f64, clock: f64 },
    #[error("internal scheduling produced an event at t={event_time} beyond the horizon {horizon}")]
    EventHorizonExceeded { event_time: f64, horizon: f64 },
    #[error(transparent)]
    Decay(#[from] DecayError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Recall(#[from] RecallError),
    #[error(transparent)]
    Influence(#[from] InfluenceError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Formats a float with 12 significant digits in scientific notation, the
/// serialization used throughout logs and bundles.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else if x == 0.0 {
        "0".to_owned()
    } else {
        format!("{x:.11e}")
    }
}

/// Seeded, portable random stream for stochastic mode: ChaCha8 keyed by
/// the scenario seed. Uniform doubles take the high 53 bits of one `u64`
/// draw; exponential samples use the inverse CDF. The algorithm is fixed
/// so stochastic logs stay stable across platforms and releases.
#[derive(Debug, Clone)]
pub struct SimRng {
    rng: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponentially distributed with the given mean.
    pub fn exponential(&mut self, mean: f64) -> f64 {
        -mean * (1.0 - self.uniform()).ln()
    }
}

/// One append-only log record. Environment and measurement records carry
/// no proposition; environment records put the new factor in the strength
/// column, measurement records the measured truth value (bottom reads 0).
#[derive(Debug, Clone, PartialEq)]
pub struct EventLogRecord {
    pub time: f64,
    pub prop: Option<PropId>,
    pub phase_before: Option<Phase>,
    pub phase_after: Option<Phase>,
    pub strength: f64,
    pub latency: Option<f64>,
    pub cause: String,
}

pub const LOG_CSV_HEADER: &str = "time,prop,phase_before,phase_after,strength,latency,cause";

impl EventLogRecord {
    pub fn csv_row(&self) -> String {
        let phase = |p: &Option<Phase>| p.map_or(String::new(), |p| p.to_string());
        format!(
            "{},{},{},{},{},{},{}",
            sig12(self.time),
            self.prop.as_ref().map_or("", |p| p.as_str()),
            phase(&self.phase_before),
            phase(&self.phase_after),
            sig12(self.strength),
            self.latency.map_or(String::new(), sig12),
            self.cause
        )
    }

    pub fn json_line(&self) -> String {
        let phase = |p: &Option<Phase>| p.map_or("null".to_owned(), |p| format!("\"{p}\""));
        let latency = match self.latency {
            Some(l) if l.is_finite() => sig12(l),
            _ => "null".to_owned(),
        };
        format!(
            "{{\"time\":{},\"prop\":{},\"phase_before\":{},\"phase_after\":{},\"strength\":{},\"latency\":{},\"cause\":\"{}\"}}",
            sig12(self.time),
            self.prop
                .as_ref()
                .map_or("null".to_owned(), |p| format!("\"{p}\"")),
            phase(&self.phase_before),
            phase(&self.phase_after),
            sig12(self.strength),
            latency,
            self.cause
        )
    }
}

pub fn render_log_csv(records: &[EventLogRecord]) -> String {
    let mut out = String::from(LOG_CSV_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&record.csv_row());
        out.push('\n');
    }
    out
}

pub fn render_log_jsonl(records: &[EventLogRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&record.json_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Action {
    External(EventKindSpec),
    /// The realization window expires and decay begins.
    BeginDecay { target: PropId, generation: u64 },
    /// A scheduled latency transition fires.
    ScheduledRealization {
        target: PropId,
        anchor: PropId,
        latency: f64,
        depth: usize,
        generation: u64,
    },
    /// A threshold propagation recalls the target at the same timestamp.
    PropagatedRecall {
        target: PropId,
        source: PropId,
        via_inner: ContextId,
        via_outer: ContextId,
        depth: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct QueuedEvent {
    time: f64,
    seq: u64,
    action: Action,
}

impl Eq for QueuedEvent {}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct PropRuntime {
    memory: MemoryState,
    curve: Option<DecayCurve>,
    resilience: ResilienceAccumulator,
    /// Most recently resolved pipeline latency for this proposition.
    resolved_latency: Option<f64>,
    /// Bumped on every phase change; stale scheduled events are dropped.
    generation: u64,
}

impl PropRuntime {
    fn strength_at(&self, t: f64) -> f64 {
        match self.memory.phase {
            Phase::Realized => 1.0,
            Phase::Unresolved => 0.0,
            Phase::Decayed => self
                .curve
                .as_ref()
                .and_then(|c| c.strength(t).ok())
                .unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalState {
    pub prop: PropId,
    pub phase: Phase,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainMetrics {
    pub chain_id: ChainId,
    pub entropy_bits: f64,
    pub efficiency: f64,
    pub mean_latency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsBundle {
    pub chains: Vec<ChainMetrics>,
    pub rank_correlation: Option<f64>,
    pub finals: Vec<FinalState>,
}

impl MetricsBundle {
    /// Stable JSON rendering (floats in 12-significant-digit notation).
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"chains\":[");
        for (i, chain) in self.chains.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"chain_id\":\"{}\",\"entropy_bits\":{},\"efficiency\":{},\"mean_latency\":{}}}",
                chain.chain_id,
                sig12(chain.entropy_bits),
                sig12(chain.efficiency),
                chain
                    .mean_latency
                    .filter(|m| m.is_finite())
                    .map_or("null".to_owned(), sig12),
            ));
        }
        out.push_str("],\"rank_correlation\":");
        out.push_str(
            &self
                .rank_correlation
                .map_or("null".to_owned(), sig12),
        );
        out.push_str(",\"final\":[");
        for (i, f) in self.finals.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"prop\":\"{}\",\"phase\":\"{}\",\"strength\":{}}}",
                f.prop,
                f.phase,
                sig12(f.strength)
            ));
        }
        out.push_str("]}");
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub log: Vec<EventLogRecord>,
    pub metrics: MetricsBundle,
}

/// A single in-progress simulation. One simulation owns one mutation
/// thread; distinct simulations are independent.
pub struct Simulation {
    config: ScenarioConfig,
    registry: PropositionRegistry,
    matrix: RelationMatrix,
    hierarchy: ContextHierarchy,
    beliefs: BeliefTable,
    branching: BranchingTrace,
    props: IndexMap<PropId, PropRuntime>,
    queue: BinaryHeap<Reverse<QueuedEvent>>,
    next_seq: u64,
    clock: f64,
    environment: f64,
    rng: SimRng,
    log: Vec<EventLogRecord>,
}

impl Simulation {
    /// Validates the config and prepares the event queue. Schedule points
    /// of the environment spec become internal environment events, ordered
    /// after same-time external events.
    pub fn new(config: ScenarioConfig) -> Result<Self, EngineError> {
        let report = config.validate();
        if !report.is_valid() {
            return Err(EngineError::ValidationFailed(report));
        }
        let registry = config.registry();
        let params = &config.params;
        let props: IndexMap<PropId, PropRuntime> = registry
            .iter()
            .map(|(id, _)| {
                (
                    id.clone(),
                    PropRuntime {
                        memory: MemoryState::unresolved(),
                        curve: None,
                        resilience: ResilienceAccumulator::new(params.alpha_res),
                        resolved_latency: None,
                        generation: 0,
                    },
                )
            })
            .collect();

        let mut queue = BinaryHeap::new();
        let mut next_seq = 0u64;
        for event in &config.events {
            queue.push(Reverse(QueuedEvent {
                time: event.time,
                seq: next_seq,
                action: Action::External(event.kind.clone()),
            }));
            next_seq += 1;
        }
        if let crate::scenario::EnvironmentSpec::Schedule(points) = &params.environment {
            for point in points {
                if point.t > 0.0 {
                    queue.push(Reverse(QueuedEvent {
                        time: point.t,
                        seq: next_seq,
                        action: Action::External(EventKindSpec::Environment { value: point.value }),
                    }));
                    next_seq += 1;
                }
            }
        }

        let mut log = Vec::new();
        for id in registry.ids() {
            log.push(EventLogRecord {
                time: 0.0,
                prop: Some(id.clone()),
                phase_before: Some(Phase::Unresolved),
                phase_after: Some(Phase::Unresolved),
                strength: 0.0,
                latency: None,
                cause: "init".to_owned(),
            });
        }

        Ok(Self {
            registry,
            matrix: config.relation_matrix(),
            hierarchy: config.hierarchy(),
            beliefs: BeliefTable::from_scenario(
                &config.registry(),
                &config.relation_matrix(),
                &params.bayes,
            ),
            branching: config.branching_trace(),
            props,
            queue,
            next_seq,
            clock: 0.0,
            environment: params.environment.at(0.0),
            rng: SimRng::new(config.seed),
            log,
            config,
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn environment(&self) -> f64 {
        self.environment
    }

    pub fn log(&self) -> &[EventLogRecord] {
        &self.log
    }

    pub fn phase(&self, id: &PropId) -> Option<Phase> {
        self.props.get(id).map(|p| p.memory.phase)
    }

    /// Injects an external event mid-run. Events in the past are the
    /// clock-regression error.
    pub fn inject(&mut self, event: EventSpec) -> Result<(), EngineError> {
        if event.time < self.clock {
            return Err(EngineError::ClockRegression {
                event_time: event.time,
                clock: self.clock,
            });
        }
        self.queue.push(Reverse(QueuedEvent {
            time: event.time,
            seq: self.next_seq,
            action: Action::External(event.kind),
        }));
        self.next_seq += 1;
        Ok(())
    }

    /// Applies the next queued event at or before the horizon. Returns
    /// false when no such event remains.
    pub fn step(&mut self) -> Result<bool, EngineError> {
        let horizon = self.config.horizon;
        match self.queue.peek() {
            Some(Reverse(event)) if event.time <= horizon => {}
            _ => return Ok(false),
        }
        let Reverse(event) = self.queue.pop().expect("peeked above");
        self.apply(event)?;
        Ok(true)
    }

    pub fn run_to_horizon(&mut self) -> Result<(), EngineError> {
        while self.step()? {}
        Ok(())
    }

    fn apply(&mut self, event: QueuedEvent) -> Result<(), EngineError> {
        if event.time < self.clock {
            return Err(EngineError::ClockRegression {
                event_time: event.time,
                clock: self.clock,
            });
        }
        if event.time > self.config.horizon {
            return Err(EngineError::EventHorizonExceeded {
                event_time: event.time,
                horizon: self.config.horizon,
            });
        }
        self.clock = event.time;
        let t = event.time;
        match event.action {
            Action::External(EventKindSpec::Recall { target }) => {
                let cause = format!("event:recall({target})");
                self.realize(&target, t, 0, cause, None)?;
            }
            Action::External(EventKindSpec::Trigger { context, target }) => {
                self.apply_trigger(&context, &target, t)?;
            }
            Action::External(EventKindSpec::Environment { value }) => {
                self.environment = value;
                self.log.push(EventLogRecord {
                    time: t,
                    prop: None,
                    phase_before: None,
                    phase_after: None,
                    strength: value,
                    latency: None,
                    cause: "event:environment".to_owned(),
                });
            }
            Action::External(EventKindSpec::Measure { branch, step }) => {
                let outcome = self
                    .branching
                    .branch(&branch)
                    .and_then(|trace| trace.value_at(step))
                    .unwrap_or(TruthValue::Bottom);
                let (strength, label) = match outcome {
                    TruthValue::True => (1.0, "true"),
                    TruthValue::False => (0.0, "false"),
                    TruthValue::Bottom => (0.0, "bot"),
                };
                self.log.push(EventLogRecord {
                    time: t,
                    prop: None,
                    phase_before: None,
                    phase_after: None,
                    strength,
                    latency: None,
                    cause: format!("event:measure({branch};{step})={label}"),
                });
            }
            Action::BeginDecay { target, generation } => {
                self.begin_decay(&target, t, generation)?;
            }
            Action::ScheduledRealization {
                target,
                anchor,
                latency,
                depth,
                generation,
            } => {
                if self.props[&target].generation == generation
                    && self.props[&target].memory.phase != Phase::Realized
                {
                    let cause = format!("scheduled({anchor}->{target};depth={depth})");
                    self.realize(&target, t, depth, cause, Some(latency))?;
                }
            }
            Action::PropagatedRecall {
                target,
                source,
                via_inner,
                via_outer,
                depth,
            } => {
                if self.props[&target].memory.phase != Phase::Realized {
                    let cause = format!(
                        "propagation({source}->{target};via={via_inner}->{via_outer};depth={depth})"
                    );
                    self.realize(&target, t, depth, cause, None)?;
                }
            }
        }
        Ok(())
    }

    /// Reactivation per the trigger rule: a non-empty trigger context
    /// restores a decayed target; anything else is a logged no-op.
    fn apply_trigger(
        &mut self,
        context: &ContextId,
        target: &PropId,
        t: f64,
    ) -> Result<(), EngineError> {
        let members: Vec<PropId> = self.hierarchy.members(context)?.iter().cloned().collect();
        let state = self.props[target].memory.clone();
        let reactivated = match reactivate(&state, &members, t) {
            Ok(new_state) => new_state.phase == Phase::Realized,
            Err(DecayError::NotDecayed | DecayError::TimeBeforeCurveStart { .. }) => false,
            Err(e) => return Err(e.into()),
        };
        if reactivated {
            let cause = format!("event:trigger({context}->{target})");
            self.realize(target, t, 0, cause, None)?;
        } else {
            let rt = &self.props[target];
            self.log.push(EventLogRecord {
                time: t,
                prop: Some(target.clone()),
                phase_before: Some(rt.memory.phase),
                phase_after: Some(rt.memory.phase),
                strength: rt.strength_at(t),
                latency: None,
                cause: format!("event:trigger({context}->{target});no-op"),
            });
        }
        Ok(())
    }

    fn schedule(&mut self, time: f64, action: Action) {
        self.queue.push(Reverse(QueuedEvent {
            time,
            seq: self.next_seq,
            action,
        }));
        self.next_seq += 1;
    }

    /// Realizes `target` at time `t` and applies the recall side effects:
    /// resilience credit, Bayesian reinforcement, curve resets of related
    /// decayed propositions, latency scheduling, and DAG propagation.
    /// Realizing an already-realized target is a silent no-op.
    fn realize(
        &mut self,
        target: &PropId,
        t: f64,
        depth: usize,
        cause: String,
        latency_used: Option<f64>,
    ) -> Result<(), EngineError> {
        let params = self.config.params.clone();
        {
            let rt = &mut self.props[target];
            if rt.memory.phase == Phase::Realized {
                return Ok(());
            }
            let phase_before = rt.memory.phase;
            rt.memory = MemoryState::realized_at(t);
            rt.curve = None;
            rt.generation += 1;
            rt.resilience.record(t)?;
            let generation = rt.generation;
            self.log.push(EventLogRecord {
                time: t,
                prop: Some(target.clone()),
                phase_before: Some(phase_before),
                phase_after: Some(Phase::Realized),
                strength: 1.0,
                latency: latency_used,
                cause,
            });
            self.schedule(
                t + params.realization_duration,
                Action::BeginDecay {
                    target: target.clone(),
                    generation,
                },
            );
        }

        if depth >= params.cascade_depth {
            log::debug!("cascade depth cap reached at {target} (t={t})");
            return Ok(());
        }

        // Bayesian reinforcement: one sequential update of the priors by
        // the posterior distribution given the recalled target.
        let bayes_enabled = params.modifiers.contains(&Modifier::Bayesian);
        let mut posteriors: IndexMap<PropId, f64> = IndexMap::new();
        if bayes_enabled {
            let members: Vec<PropId> = self.registry.ids().cloned().collect();
            match posterior_distribution(&self.beliefs, target, &members) {
                Ok(dist) => {
                    for (id, p) in dist {
                        self.beliefs.set_prior(id.clone(), p);
                        posteriors.insert(id, p);
                    }
                }
                Err(BayesError::ZeroMarginal) => {
                    log::debug!("zero marginal for {target}; reinforcement skipped");
                }
                Err(e) => return Err(e.into()),
            }
        }

        let related: Vec<PropId> = self
            .registry
            .ids()
            .filter(|p| *p != target && self.matrix.relation(target, p) > 0.0)
            .cloned()
            .collect();

        // Reset the decay curves of related decayed propositions; with the
        // Bayesian modifier active the reset curve is the posterior-scaled
        // one, anchored at the recall time.
        for other in &related {
            if self.props[other].memory.phase != Phase::Decayed {
                continue;
            }
            let prop_def = self.registry.lookup(other).expect("registered").clone();
            let rt = &mut self.props[other];
            let rate = adjusted_decay_rate(
                prop_def.decay_constant,
                rt.resilience.value(),
                params.tau_res,
            )
            .rate;
            let curve = match posteriors.get(other) {
                Some(&posterior) if bayes_enabled => DecayCurve::bayesian(posterior, rate, t),
                _ => DecayCurve::ebbinghaus(rate, t),
            }
            .with_amplitude(prop_def.initial_amplitude);
            let strength = curve.strength(t)?;
            rt.curve = Some(curve);
            rt.memory.last_reset = Some(t);
            self.log.push(EventLogRecord {
                time: t,
                prop: Some(other.clone()),
                phase_before: Some(Phase::Decayed),
                phase_after: Some(Phase::Decayed),
                strength,
                latency: None,
                cause: format!("curve_reset({target}->{other})"),
            });
        }

        // Latency scheduling through the modifier pipeline.
        if params.enable_scheduling {
            for other in &related {
                if self.props[other].memory.phase == Phase::Realized {
                    continue;
                }
                let relation = self.matrix.relation(target, other);
                let posterior = posteriors.get(other).copied();
                if bayes_enabled && posterior.is_none() {
                    continue;
                }
                let incoming = if params.modifiers.contains(&Modifier::Simultaneous) {
                    Some(self.incoming_influence(other))
                } else {
                    None
                };
                let query = LatencyQuery {
                    target: other.clone(),
                    anchor: Some(target.clone()),
                    environment: self.environment,
                    modifiers: params.modifiers.clone(),
                };
                let inputs = LatencyInputs {
                    base_latency: self.registry.lookup(other).expect("registered").base_latency,
                    relation: Some(relation),
                    feedback: Some(params.alpha_fb * relation),
                    posterior,
                    incoming_influence: incoming,
                };
                let resolution = match resolve_latency(&query, &inputs) {
                    Ok(r) => r,
                    Err(RecallError::NoIncomingInfluence) => continue,
                    Err(e) => return Err(e.into()),
                };
                if !resolution.latency.is_finite() {
                    continue;
                }
                self.props[other].resolved_latency = Some(resolution.latency);
                let delay = if params.stochastic {
                    self.rng.exponential(resolution.latency)
                } else {
                    resolution.latency
                };
                self.schedule(
                    t + delay,
                    Action::ScheduledRealization {
                        target: other.clone(),
                        anchor: target.clone(),
                        latency: resolution.latency,
                        depth: depth + 1,
                        generation: self.props[other].generation,
                    },
                );
            }
        }

        // Threshold propagation across the context DAG.
        if params.enable_propagation {
            let mut queued: IndexSet<PropId> = IndexSet::new();
            let contexts: Vec<ContextId> = self
                .hierarchy
                .contexts()
                .filter(|c| {
                    self.hierarchy
                        .members(c)
                        .map(|m| m.contains(target))
                        .unwrap_or(false)
                })
                .cloned()
                .collect();
            for inner in &contexts {
                for outer in self.hierarchy.ancestors(inner)? {
                    let members: Vec<PropId> =
                        self.hierarchy.members(&outer)?.iter().cloned().collect();
                    for other in members {
                        if other == *target
                            || queued.contains(&other)
                            || self.props[&other].memory.phase == Phase::Realized
                        {
                            continue;
                        }
                        if crate::hierarchy::propagates(
                            &self.hierarchy,
                            &self.matrix,
                            target,
                            &other,
                            inner,
                            &outer,
                            params.tau,
                        )? {
                            queued.insert(other.clone());
                            self.schedule(
                                t,
                                Action::PropagatedRecall {
                                    target: other,
                                    source: target.clone(),
                                    via_inner: inner.clone(),
                                    via_outer: outer.clone(),
                                    depth: depth + 1,
                                },
                            );
                        }
                    }
                }
            }
        }

        Ok(())
    }

    /// Summed simultaneous influence on `target` from currently realized
    /// propositions, each contributing `R / T_R(source)` with the source's
    /// last resolved latency (its base environmental latency when it has
    /// only been recalled externally).
    fn incoming_influence(&self, target: &PropId) -> f64 {
        let mut total = 0.0;
        for (id, rt) in &self.props {
            if id == target || rt.memory.phase != Phase::Realized {
                continue;
            }
            let relation = self.matrix.relation(id, target);
            if relation <= 0.0 {
                continue;
            }
            let latency = rt.resolved_latency.unwrap_or_else(|| {
                self.registry.lookup(id).expect("registered").base_latency / self.environment
            });
            if latency > 0.0 {
                total += relation / latency;
            }
        }
        total
    }

    fn begin_decay(&mut self, target: &PropId, t: f64, generation: u64) -> Result<(), EngineError> {
        let params = &self.config.params;
        let prop_def = self.registry.lookup(target).expect("registered").clone();
        let rt = &mut self.props[target];
        if rt.generation != generation || rt.memory.phase != Phase::Realized {
            return Ok(());
        }
        let rate = adjusted_decay_rate(
            prop_def.decay_constant,
            rt.resilience.value(),
            params.tau_res,
        )
        .rate;
        rt.memory.phase = Phase::Decayed;
        rt.memory.t_f = Some(t);
        rt.memory.last_reset = Some(t);
        rt.generation += 1;
        let curve = DecayCurve::ebbinghaus(rate, t).with_amplitude(prop_def.initial_amplitude);
        let strength = curve.strength(t)?;
        rt.curve = Some(curve);
        self.log.push(EventLogRecord {
            time: t,
            prop: Some(target.clone()),
            phase_before: Some(Phase::Realized),
            phase_after: Some(Phase::Decayed),
            strength,
            latency: None,
            cause: "decay_onset".to_owned(),
        });
        Ok(())
    }

    /// Drains pending events past the horizon into the log, appends final
    /// per-proposition records, and assembles the metrics bundle.
    pub fn finish(mut self) -> Result<SimulationOutput, EngineError> {
        let horizon = self.config.horizon;
        while let Some(Reverse(event)) = self.queue.pop() {
            match event.action {
                Action::ScheduledRealization {
                    target,
                    anchor,
                    latency,
                    depth,
                    generation,
                } => {
                    let rt = &self.props[&target];
                    if rt.generation != generation || rt.memory.phase == Phase::Realized {
                        continue;
                    }
                    self.log.push(EventLogRecord {
                        time: event.time,
                        prop: Some(target.clone()),
                        phase_before: Some(rt.memory.phase),
                        phase_after: Some(rt.memory.phase),
                        strength: rt.strength_at(horizon),
                        latency: Some(latency),
                        cause: format!("pending:scheduled({anchor}->{target};depth={depth})"),
                    });
                }
                Action::BeginDecay { target, generation } => {
                    let rt = &self.props[&target];
                    if rt.generation != generation || rt.memory.phase != Phase::Realized {
                        continue;
                    }
                    self.log.push(EventLogRecord {
                        time: event.time,
                        prop: Some(target.clone()),
                        phase_before: Some(Phase::Realized),
                        phase_after: Some(Phase::Realized),
                        strength: 1.0,
                        latency: None,
                        cause: "pending:decay_onset".to_owned(),
                    });
                }
                Action::External(kind) => {
                    let label = match kind {
                        EventKindSpec::Recall { target } => format!("event:recall({target})"),
                        EventKindSpec::Trigger { context, target } => {
                            format!("event:trigger({context}->{target})")
                        }
                        EventKindSpec::Environment { .. } => "event:environment".to_owned(),
                        EventKindSpec::Measure { branch, step } => {
                            format!("event:measure({branch};{step})")
                        }
                    };
                    self.log.push(EventLogRecord {
                        time: event.time,
                        prop: None,
                        phase_before: None,
                        phase_after: None,
                        strength: 0.0,
                        latency: None,
                        cause: format!("pending:{label}"),
                    });
                }
                Action::PropagatedRecall { .. } => {
                    // Propagation shares its trigger's timestamp, so it can
                    // only remain queued if that timestamp exceeded the
                    // horizon, and then its trigger never fired.
                }
            }
        }

        for (id, rt) in &self.props {
            self.log.push(EventLogRecord {
                time: horizon,
                prop: Some(id.clone()),
                phase_before: Some(rt.memory.phase),
                phase_after: Some(rt.memory.phase),
                strength: rt.strength_at(horizon),
                latency: None,
                cause: "final".to_owned(),
            });
        }

        let metrics = self.metrics_bundle()?;
        Ok(SimulationOutput {
            log: self.log,
            metrics,
        })
    }

    /// Per-chain distribution (explicit, or the softmax of mean member
    /// relations), entropy, efficiency, and mean member latency (last
    /// scheduled latency, base environmental latency as fallback).
    fn metrics_bundle(&self) -> Result<MetricsBundle, EngineError> {
        let params = &self.config.params;
        let mut tuples: Vec<(ChainId, ChainDistribution, Vec<f64>)> = Vec::new();
        for chain in &params.chains {
            let dist = match &chain.distribution {
                Some(probs) => ChainDistribution::new(chain.members.clone(), probs.clone())?,
                None => {
                    let scores: Vec<(PropId, f64)> = chain
                        .members
                        .iter()
                        .map(|m| {
                            let others: Vec<&PropId> =
                                chain.members.iter().filter(|o| *o != m).collect();
                            let mean = if others.is_empty() {
                                0.0
                            } else {
                                others
                                    .iter()
                                    .map(|o| self.matrix.relation(m, o))
                                    .sum::<f64>()
                                    / others.len() as f64
                            };
                            (m.clone(), mean)
                        })
                        .collect();
                    optimal_distribution(&scores, params.beta, params.optimal_sign)?
                }
            };
            let latencies: Vec<f64> = chain
                .members
                .iter()
                .map(|m| {
                    self.props[m].last_latency.unwrap_or_else(|| {
                        self.registry.lookup(m).expect("registered").base_latency
                            / self.environment
                    })
                })
                .collect();
            tuples.push((chain.id.clone(), dist, latencies));
        }

        let report = entropy_latency_report(&tuples).ok();
        let chains = tuples
            .iter()
            .map(|(id, dist, latencies)| {
                let entropy = dist.entropy_bits();
                let finite: Vec<f64> =
                    latencies.iter().copied().filter(|l| l.is_finite()).collect();
                ChainMetrics {
                    chain_id: id.clone(),
                    entropy_bits: entropy,
                    efficiency: 1.0 / (1.0 + entropy),
                    mean_latency: if finite.is_empty() {
                        None
                    } else {
                        Some(finite.iter().sum::<f64>() / finite.len() as f64)
                    },
                }
            })
            .collect();
        let finals = self
            .props
            .iter()
            .map(|(id, rt)| FinalState {
                prop: id.clone(),
                phase: rt.memory.phase,
                strength: rt.strength_at(self.config.horizon),
            })
            .collect();
        Ok(MetricsBundle {
            chains,
            rank_correlation: report.and_then(|r| r.rank_correlation),
            finals,
        })
    }

    /// Validates and runs a scenario end to end.
    pub fn run(config: ScenarioConfig) -> Result<SimulationOutput, EngineError> {
        let mut sim = Simulation::new(config)?;
        sim.run_to_horizon()?;
        sim.finish()
    }
}
