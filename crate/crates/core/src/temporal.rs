//! Temporal operators over linear and branching traces.
//!
//! A trace is either finite or lasso-shaped: a finite prefix followed by a
//! non-empty period that repeats forever. The lasso form is the finite
//! stand-in for unbounded time, and the two operator theorems are checked
//! on it. Branching traces carry per-step measurement outcomes, where the
//! bottom value models an unresolved measurement.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::BranchId;

/// Outcome of observing one step: a truth value, or bottom (an unresolved
/// measurement). Serialized as `true`, `false`, or `"bot"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawValue", into = "RawValue")]
pub enum TruthValue {
    True,
    False,
    Bottom,
}

impl TruthValue {
    /// Only `True` counts as true; `False` and `Bottom` do not.
    pub fn is_true(self) -> bool {
        self == TruthValue::True
    }

    pub fn is_bottom(self) -> bool {
        self == TruthValue::Bottom
    }
}

impl From<bool> for TruthValue {
    fn from(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawValue {
    Bool(bool),
    Token(String),
}

impl From<TruthValue> for RawValue {
    fn from(v: TruthValue) -> Self {
        match v {
            TruthValue::True => RawValue::Bool(true),
            TruthValue::False => RawValue::Bool(false),
            TruthValue::Bottom => RawValue::Token("bot".to_owned()),
        }
    }
}

impl TryFrom<RawValue> for TruthValue {
    type Error = String;

    fn try_from(raw: RawValue) -> Result<Self, Self::Error> {
        match raw {
            RawValue::Bool(b) => Ok(b.into()),
            RawValue::Token(s) if s == "bot" => Ok(TruthValue::Bottom),
            RawValue::Token(s) => Err(format!("invalid trace value {s:?}; expected \"bot\"")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemporalError {
    #[error("trace has no steps")]
    EmptyTrace,
    #[error("operation requires a lasso trace")]
    NotLasso,
    #[error("unknown branch `{0}`")]
    UnknownBranch(BranchId),
    #[error("step {0} is beyond the end of a finite branch")]
    StepOutOfRange(usize),
}

fn default_dt() -> f64 {
    1.0
}

/// A dt-discretized trace: finite prefix plus optional repeating period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trace {
    pub prefix: Vec<TruthValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<Vec<TruthValue>>,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl Trace {
    /// Finite boolean trace.
    pub fn finite(values: impl IntoIterator<Item = bool>) -> Self {
        Self {
            prefix: values.into_iter().map(TruthValue::from).collect(),
            period: None,
            dt: 1.0,
        }
    }

    /// Lasso trace: `prefix` followed by `period` repeating forever.
    pub fn lasso(
        prefix: impl IntoIterator<Item = bool>,
        period: impl IntoIterator<Item = bool>,
    ) -> Self {
        Self {
            prefix: prefix.into_iter().map(TruthValue::from).collect(),
            period: Some(period.into_iter().map(TruthValue::from).collect()),
            dt: 1.0,
        }
    }

    /// Finite trace over the three-valued domain.
    pub fn ternary(values: impl IntoIterator<Item = TruthValue>) -> Self {
        Self {
            prefix: values.into_iter().collect(),
            period: None,
            dt: 1.0,
        }
    }

    pub fn is_lasso(&self) -> bool {
        self.period.as_ref().is_some_and(|p| !p.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && !self.is_lasso()
    }

    /// Number of steps that cover every reachable state: the prefix plus
    /// one full period.
    pub fn coverage_len(&self) -> usize {
        self.prefix.len() + self.period.as_ref().map_or(0, Vec::len)
    }

    /// Value at step `k`; total for lassos, `None` past the end of a
    /// finite trace.
    pub fn value_at(&self, k: usize) -> Option<TruthValue> {
        if k < self.prefix.len() {
            return Some(self.prefix[k]);
        }
        let period = self.period.as_ref().filter(|p| !p.is_empty())?;
        Some(period[(k - self.prefix.len()) % period.len()])
    }

    /// The trace advanced by one step. Shifting a lasso with an empty
    /// prefix rotates its period.
    pub fn shifted(&self) -> Trace {
        if !self.prefix.is_empty() {
            return Trace {
                prefix: self.prefix[1..].to_vec(),
                period: self.period.clone(),
                dt: self.dt,
            };
        }
        match &self.period {
            Some(p) if !p.is_empty() => {
                let mut rotated = p[1..].to_vec();
                rotated.push(p[0]);
                Trace {
                    prefix: Vec::new(),
                    period: Some(rotated),
                    dt: self.dt,
                }
            }
            _ => self.clone(),
        }
    }

    fn ensure_nonempty(&self) -> Result<(), TemporalError> {
        if self.is_empty() {
            Err(TemporalError::EmptyTrace)
        } else {
            Ok(())
        }
    }
}

/// Step-indexed state record. Distinct steps yield distinct records even
/// when the observed values coincide, so the state sequence of a linear
/// trace never aliases two time points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateRecord {
    pub step: usize,
    pub value: TruthValue,
}

/// The step-indexed state sequence of the first `upto` steps.
pub fn state_records(trace: &Trace, upto: usize) -> Vec<StateRecord> {
    (0..upto)
        .filter_map(|step| {
            trace
                .value_at(step)
                .map(|value| StateRecord { step, value })
        })
        .collect()
}

/// `□x`: every reachable step is true.
pub fn always(trace: &Trace) -> Result<bool, TemporalError> {
    trace.ensure_nonempty()?;
    Ok((0..trace.coverage_len()).all(|k| trace.value_at(k).is_some_and(TruthValue::is_true)))
}

/// `◇x`: some reachable step is true.
pub fn eventually(trace: &Trace) -> Result<bool, TemporalError> {
    trace.ensure_nonempty()?;
    Ok((0..trace.coverage_len()).any(|k| trace.value_at(k).is_some_and(TruthValue::is_true)))
}

/// `○x` at step `k`: the value one step later, under strong-next
/// semantics (false past the end of a finite trace).
pub fn next(trace: &Trace, k: usize) -> bool {
    trace.value_at(k + 1).is_some_and(TruthValue::is_true)
}

/// Checks `□x ⟹ ◇x` on the given trace. Holds for every non-empty trace.
pub fn check_box_implies_diamond(trace: &Trace) -> Result<bool, TemporalError> {
    Ok(!always(trace)? || eventually(trace)?)
}

/// Checks `○(□x) ⟹ □(○x)` under shifted-lasso semantics. The theorem is
/// stated over unbounded time, so finite traces are rejected; it holds for
/// every lasso.
pub fn check_next_box_commute(trace: &Trace) -> Result<bool, TemporalError> {
    if !trace.is_lasso() {
        return Err(TemporalError::NotLasso);
    }
    let antecedent = always(&trace.shifted())?;
    let consequent = (0..trace.coverage_len()).all(|k| next(trace, k));
    Ok(!antecedent || consequent)
}

/// A set of branches sharing a time step, each carrying its own
/// measurement-outcome trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchingTrace {
    branches: IndexMap<BranchId, Trace>,
}

impl BranchingTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: BranchId, trace: Trace) {
        self.branches.insert(id, trace);
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn branch(&self, id: &BranchId) -> Option<&Trace> {
        self.branches.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BranchId, &Trace)> {
        self.branches.iter()
    }
}

impl FromIterator<(BranchId, Trace)> for BranchingTrace {
    fn from_iter<T: IntoIterator<Item = (BranchId, Trace)>>(iter: T) -> Self {
        Self {
            branches: iter.into_iter().collect(),
        }
    }
}

/// A branch is realized when some reachable step measures to a value other
/// than bottom; a branch that measures bottom everywhere stays unrealized.
pub fn branch_realized(bt: &BranchingTrace, branch: &BranchId) -> Result<bool, TemporalError> {
    let trace = bt
        .branch(branch)
        .ok_or_else(|| TemporalError::UnknownBranch(branch.clone()))?;
    Ok((0..trace.coverage_len()).any(|k| trace.value_at(k).is_some_and(|v| !v.is_bottom())))
}

/// The superposition at step `k`: one tagged singleton state per branch,
/// distinct per branch even when the observed values coincide.
pub fn superposition(
    bt: &BranchingTrace,
    k: usize,
) -> Result<Vec<(BranchId, TruthValue)>, TemporalError> {
    bt.iter()
        .map(|(id, trace)| {
            trace
                .value_at(k)
                .map(|v| (id.clone(), v))
                .ok_or(TemporalError::StepOutOfRange(k))
        })
        .collect()
}
