//! Recall-latency computation.
//!
//! Every latency starts from the base environmental form `T_B / ℰ` and is
//! then reshaped by an explicit modifier pipeline: the relation form
//! `1 / (R_C · ℰ)`, feedback division by `(1 + F)`, Bayesian division by a
//! posterior, or replacement by the reciprocal of incoming simultaneous
//! influence. Divergence to infinity is a value, not an error: a latency
//! of `+∞` means the transition never fires.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::PropId;
use crate::scenario::Phase;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecallError {
    #[error("latency inputs must be positive")]
    NonPositiveInput,
    #[error("elapsed time must be non-negative")]
    NegativeTime,
    #[error("latency has not been resolved for the target")]
    UnresolvedLatency,
    #[error("modifier `{0}` requires an anchor proposition")]
    MissingAnchor(&'static str),
    #[error("modifier `{0}` requires its input")]
    MissingInput(&'static str),
    #[error("no positive incoming influence")]
    NoIncomingInfluence,
}

/// A latency modifier, applied in the order listed by the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modifier {
    /// Replace the base latency with `1 / (R_C · ℰ)`.
    Relation,
    /// Divide by `(1 + F)`.
    Feedback,
    /// Divide by the posterior recall probability.
    Bayesian,
    /// Replace with the reciprocal of summed incoming influence.
    Simultaneous,
}

impl Modifier {
    pub fn label(self) -> &'static str {
        match self {
            Modifier::Relation => "relation",
            Modifier::Feedback => "feedback",
            Modifier::Bayesian => "bayesian",
            Modifier::Simultaneous => "simultaneous",
        }
    }

    fn needs_anchor(self) -> bool {
        matches!(
            self,
            Modifier::Relation | Modifier::Feedback | Modifier::Bayesian
        )
    }
}

/// `T_R = T_B / ℰ`: below the base latency exactly when ℰ > 1.
pub fn base_environment_latency(base: f64, environment: f64) -> Result<f64, RecallError> {
    if !(base > 0.0) || !(environment > 0.0) {
        return Err(RecallError::NonPositiveInput);
    }
    Ok(base / environment)
}

/// `T_R = 1 / (R_C · ℰ)`; diverges to `+∞` as the relation vanishes.
pub fn relation_latency(relation: f64, environment: f64) -> f64 {
    if relation <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (relation * environment)
    }
}

/// Probability that the transition has fired after elapsed time `t`,
/// under the exponential law `1 - e^{-t / T_R}`. An infinite latency
/// never fires.
pub fn transition_probability(t: f64, latency: f64) -> Result<f64, RecallError> {
    if t < 0.0 {
        return Err(RecallError::NegativeTime);
    }
    if latency.is_infinite() {
        return Ok(0.0);
    }
    if !(latency > 0.0) {
        return Err(RecallError::NonPositiveInput);
    }
    Ok(1.0 - (-t / latency).exp())
}

/// Deterministic phase at elapsed time `t` given a resolved latency:
/// decayed strictly before `T_R`, realized from `T_R` on.
pub fn state_at(t: f64, latency: Option<f64>) -> Result<Phase, RecallError> {
    let latency = latency.ok_or(RecallError::UnresolvedLatency)?;
    if latency.is_nan() {
        return Err(RecallError::UnresolvedLatency);
    }
    Ok(if t < latency {
        Phase::Decayed
    } else {
        Phase::Realized
    })
}

/// Members of the temporal hierarchy with bound `epsilon_h`, sorted by
/// ascending latency with ties broken lexicographically by id.
pub fn temporal_hierarchy(latencies: &[(PropId, f64)], epsilon_h: f64) -> Vec<(PropId, f64)> {
    let mut members: Vec<(PropId, f64)> = latencies
        .iter()
        .filter(|(_, t)| *t <= epsilon_h)
        .cloned()
        .collect();
    members.sort_by(|(id_a, t_a), (id_b, t_b)| t_a.total_cmp(t_b).then_with(|| id_a.cmp(id_b)));
    members
}

/// A latency request: target proposition, optional anchor (the already
/// recalled proposition), environment at query time, and the modifier
/// pipeline to apply.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyQuery {
    pub target: PropId,
    pub anchor: Option<PropId>,
    pub environment: f64,
    pub modifiers: Vec<Modifier>,
}

/// Caller-resolved inputs for the pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LatencyInputs {
    /// Base latency of the target.
    pub base_latency: f64,
    /// R_C between anchor and target.
    pub relation: Option<f64>,
    /// Feedback influence F.
    pub feedback: Option<f64>,
    /// Posterior recall probability of the target given the anchor.
    pub posterior: Option<f64>,
    /// Summed incoming simultaneous influence on the target.
    pub incoming_influence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineStage {
    pub stage: &'static str,
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyResolution {
    pub latency: f64,
    pub stages: Vec<PipelineStage>,
}

/// Runs the modifier pipeline: base environmental latency first, then each
/// modifier in query order.
pub fn resolve_latency(
    query: &LatencyQuery,
    inputs: &LatencyInputs,
) -> Result<LatencyResolution, RecallError> {
    let mut latency = base_environment_latency(inputs.base_latency, query.environment)?;
    let mut stages = vec![PipelineStage {
        stage: "base",
        latency,
    }];
    for modifier in &query.modifiers {
        if modifier.needs_anchor() && query.anchor.is_none() {
            return Err(RecallError::MissingAnchor(modifier.label()));
        }
        latency = match modifier {
            Modifier::Relation => {
                let r = inputs
                    .relation
                    .ok_or(RecallError::MissingInput("relation"))?;
                relation_latency(r, query.environment)
            }
            Modifier::Feedback => {
                let f = inputs
                    .feedback
                    .ok_or(RecallError::MissingInput("feedback"))?;
                latency / (1.0 + f)
            }
            Modifier::Bayesian => {
                let p = inputs
                    .posterior
                    .ok_or(RecallError::MissingInput("bayesian"))?;
                if p <= 0.0 {
                    f64::INFINITY
                } else {
                    latency / p
                }
            }
            Modifier::Simultaneous => {
                let s = inputs
                    .incoming_influence
                    .ok_or(RecallError::MissingInput("simultaneous"))?;
                if s <= 0.0 {
                    return Err(RecallError::NoIncomingInfluence);
                }
                1.0 / s
            }
        };
        stages.push(PipelineStage {
            stage: modifier.label(),
            latency,
        });
    }
    Ok(LatencyResolution { latency, stages })
}

/// Out-of-hierarchy preemption: the outside proposition transitions first
/// when its resolved latency is strictly smaller.
pub fn hierarchy_preemption(outside: &LatencyResolution, inside: &LatencyResolution) -> bool {
    outside.latency < inside.latency
}
