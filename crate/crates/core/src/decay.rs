//! Strength-over-time machinery: forgetting curves, reactivation resets,
//! resilience accumulation, and resilience-adjusted decay rates.
//!
//! The shipped curve kernel is the exponential forgetting curve
//! `e^{-λ(t - t_f)}`; the Bayesian-modified variant scales it by a
//! posterior recall probability. A curve satisfies `strength(start) = 1`
//! (times the configured amplitude and, for the Bayesian variant, the
//! posterior) and decays monotonically toward zero until reset.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::PropId;
use crate::scenario::{MemoryState, Phase};

/// Strengths below this floor clamp to zero so downstream products cannot
/// underflow to subnormals.
pub const STRENGTH_FLOOR: f64 = 1e-300;

/// Default resilience threshold above which decay counts as negligible.
pub const DEFAULT_RESILIENCE_THRESHOLD: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecayError {
    #[error("time {t} precedes the curve start {start}")]
    TimeBeforeCurveStart { t: f64, start: f64 },
    #[error("state is not in the decayed phase")]
    NotDecayed,
    #[error("recall time {t} does not advance past the previous recall at {last}")]
    NonMonotoneTime { t: f64, last: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Ebbinghaus,
    BayesianModified,
}

/// A decay curve anchored at the end of a realization window (or, for the
/// Bayesian-modified kind, at the reinforcing recall time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub kind: CurveKind,
    /// Decay rate λ ≥ 0; callers apply any resilience adjustment before
    /// constructing the curve.
    pub rate: f64,
    /// Curve start time.
    pub start: f64,
    /// Posterior recall probability scaling a Bayesian-modified curve.
    pub posterior: Option<f64>,
    /// Amplitude of the decayed state (defaults to 1).
    pub amplitude: f64,
}

impl DecayCurve {
    pub fn ebbinghaus(rate: f64, start: f64) -> Self {
        Self {
            kind: CurveKind::Ebbinghaus,
            rate,
            start,
            posterior: None,
            amplitude: 1.0,
        }
    }

    pub fn bayesian(posterior: f64, rate: f64, start: f64) -> Self {
        Self {
            kind: CurveKind::BayesianModified,
            rate,
            start,
            posterior: Some(posterior),
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Strength at time `t ≥ start`.
    ///
    /// Exponential kind: `amplitude · e^{-rate (t - start)}`.
    /// Bayesian-modified: the same, additionally scaled by the posterior.
    pub fn strength(&self, t: f64) -> Result<f64, DecayError> {
        if t < self.start {
            return Err(DecayError::TimeBeforeCurveStart {
                t,
                start: self.start,
            });
        }
        let scale = match self.kind {
            CurveKind::Ebbinghaus => 1.0,
            CurveKind::BayesianModified => self.posterior.unwrap_or(1.0),
        };
        let s = self.amplitude * scale * (-self.rate * (t - self.start)).exp();
        Ok(if s < STRENGTH_FLOOR { 0.0 } else { s })
    }
}

/// Applies the reactivation rule to a decayed state at time `t`.
///
/// A non-empty trigger context restores the state to a realized one
/// starting at `t`, with strength 1 and the decay curve reset. An empty
/// trigger leaves the state decaying without interruption.
pub fn reactivate(
    state: &MemoryState,
    trigger: &[PropId],
    t: f64,
) -> Result<MemoryState, DecayError> {
    if state.phase != Phase::Decayed {
        return Err(DecayError::NotDecayed);
    }
    let start = state.t_f.unwrap_or(f64::NEG_INFINITY);
    if t <= start {
        return Err(DecayError::TimeBeforeCurveStart { t, start });
    }
    if trigger.is_empty() {
        return Ok(state.clone());
    }
    Ok(MemoryState {
        phase: Phase::Realized,
        t_r: Some(t),
        t_f: None,
        last_reset: Some(t),
    })
}

/// Accumulated recall-frequency credit. Each recall after the first adds
/// `e^{-α (t_k - t_{k-1})}`, so tightly spaced recalls contribute close to
/// one each and the total divides the decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResilienceAccumulator {
    alpha: f64,
    recall_times: Vec<f64>,
    value: f64,
}

impl ResilienceAccumulator {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            recall_times: Vec::new(),
            value: 0.0,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn recall_times(&self) -> &[f64] {
        &self.recall_times
    }

    /// Records a recall at time `t`, which must strictly follow the
    /// previous one. The first recall contributes nothing to the sum.
    pub fn record(&mut self, t: f64) -> Result<(), DecayError> {
        if let Some(&last) = self.recall_times.last() {
            if t <= last {
                return Err(DecayError::NonMonotoneTime { t, last });
            }
            self.value += (-self.alpha * (t - last)).exp();
        }
        self.recall_times.push(t);
        Ok(())
    }
}

/// The resilience-adjusted decay rate, flagged negligible once resilience
/// reaches `tau_res`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedRate {
    pub rate: f64,
    pub negligible: bool,
}

/// `λ' = λ / (1 + resilience)`.
pub fn adjusted_decay_rate(rate: f64, resilience: f64, tau_res: f64) -> AdjustedRate {
    AdjustedRate {
        rate: rate / (1.0 + resilience),
        negligible: resilience >= tau_res,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn strength_is_one_at_curve_start() {
        let curve = DecayCurve::ebbinghaus(0.5, 3.0);
        assert_eq!(curve.strength(3.0).unwrap(), 1.0);
    }

    #[test]
    fn strength_matches_direct_scalar_evaluation() {
        // λ = 0.5, Δt = 2 → e^{-1}.
        let curve = DecayCurve::ebbinghaus(0.5, 0.0);
        let expected = 0.367_879_441_171_442_33; // e^{-1}
        assert!((curve.strength(2.0).unwrap() - expected).abs() < TOL);
    }

    #[test]
    fn bayesian_curve_starts_at_posterior() {
        let curve = DecayCurve::bayesian(0.8, 1.0, 0.0);
        assert!((curve.strength(0.0).unwrap() - 0.8).abs() < TOL);
    }

    #[test]
    fn strength_before_start_is_rejected() {
        let curve = DecayCurve::ebbinghaus(0.5, 3.0);
        assert_eq!(
            curve.strength(2.0),
            Err(DecayError::TimeBeforeCurveStart { t: 2.0, start: 3.0 })
        );
    }

    #[test]
    fn amplitude_scales_the_curve() {
        let curve = DecayCurve::ebbinghaus(1.0, 0.0).with_amplitude(0.5);
        assert!((curve.strength(0.0).unwrap() - 0.5).abs() < TOL);
    }

    #[test]
    fn tiny_strengths_clamp_to_zero() {
        let curve = DecayCurve::ebbinghaus(1.0, 0.0);
        assert_eq!(curve.strength(800.0).unwrap(), 0.0);
    }

    #[test]
    fn decay_limit_below_numerical_epsilon() {
        // strength(t) < ε for t - t_f > ln(1/ε)/λ, at ε = 1e-12.
        let eps = 1e-12_f64;
        for &rate in &[0.1, 0.5, 2.0] {
            let curve = DecayCurve::ebbinghaus(rate, 0.0);
            let t = (1.0 / eps).ln() / rate * 1.000_001;
            assert!(curve.strength(t).unwrap() < eps);
        }
    }

    #[test]
    fn bayesian_to_ebbinghaus_ratio_is_the_posterior() {
        // With equal rate and equal start, d_B / d_E = posterior pointwise.
        let posterior = 0.7;
        let d_b = DecayCurve::bayesian(posterior, 0.3, 1.0);
        let d_e = DecayCurve::ebbinghaus(0.3, 1.0);
        for &t in &[1.0, 2.5, 7.0, 40.0] {
            let ratio = d_b.strength(t).unwrap() / d_e.strength(t).unwrap();
            assert!((ratio - posterior).abs() < 1e-9);
        }
    }

    fn decayed_at(t_f: f64) -> MemoryState {
        MemoryState {
            phase: Phase::Decayed,
            t_r: Some(t_f - 1.0),
            t_f: Some(t_f),
            last_reset: Some(t_f),
        }
    }

    #[test]
    fn reactivation_restores_a_realized_state() {
        let trigger = vec![PropId::new("P2")];
        let state = reactivate(&decayed_at(2.0), &trigger, 5.0).unwrap();
        assert_eq!(state.phase, Phase::Realized);
        assert_eq!(state.t_r, Some(5.0));
        assert_eq!(state.last_reset, Some(5.0));
    }

    #[test]
    fn empty_trigger_leaves_decay_uninterrupted() {
        let state = decayed_at(2.0);
        let after = reactivate(&state, &[], 5.0).unwrap();
        assert_eq!(after, state);
    }

    #[test]
    fn reactivating_a_realized_state_is_rejected() {
        let state = MemoryState {
            phase: Phase::Realized,
            t_r: Some(0.0),
            t_f: None,
            last_reset: Some(0.0),
        };
        assert_eq!(
            reactivate(&state, &[PropId::new("P1")], 1.0),
            Err(DecayError::NotDecayed)
        );
    }

    #[test]
    fn resilience_matches_the_two_term_sum() {
        // α = 1, gaps [1, 1] after the first recall → 2 e^{-1}.
        let mut acc = ResilienceAccumulator::new(1.0);
        acc.record(0.0).unwrap();
        acc.record(1.0).unwrap();
        acc.record(2.0).unwrap();
        let expected = 0.735_758_882_342_884_7; // 2 e^{-1}
        assert!((acc.value() - expected).abs() < TOL);
    }

    #[test]
    fn first_recall_contributes_nothing() {
        let mut acc = ResilienceAccumulator::new(1.0);
        acc.record(3.0).unwrap();
        assert_eq!(acc.value(), 0.0);
    }

    #[test]
    fn equal_recall_times_are_rejected() {
        let mut acc = ResilienceAccumulator::new(1.0);
        acc.record(3.0).unwrap();
        assert_eq!(
            acc.record(3.0),
            Err(DecayError::NonMonotoneTime { t: 3.0, last: 3.0 })
        );
    }

    #[test]
    fn resilience_is_recomputable_from_recall_times() {
        let mut acc = ResilienceAccumulator::new(0.7);
        for t in [0.0, 0.4, 1.3, 1.9, 4.0] {
            acc.record(t).unwrap();
        }
        let times = acc.recall_times();
        let recomputed: f64 = times
            .windows(2)
            .map(|w| (-0.7 * (w[1] - w[0])).exp())
            .sum();
        assert!((acc.value() - recomputed).abs() < TOL);
    }

    #[test]
    fn adjusted_rate_examples() {
        assert_eq!(
            adjusted_decay_rate(1.0, 0.0, DEFAULT_RESILIENCE_THRESHOLD).rate,
            1.0
        );
        assert!((adjusted_decay_rate(1.0, 1.0, DEFAULT_RESILIENCE_THRESHOLD).rate - 0.5) < TOL);
        let huge = adjusted_decay_rate(1.0, 1e6, DEFAULT_RESILIENCE_THRESHOLD);
        assert!(huge.rate < 1e-5);
        assert!(huge.negligible);
    }

    #[test]
    fn shrinking_gaps_drive_the_adjusted_rate_to_zero() {
        // Geometric gap sequence: the adjusted rate decreases monotonically.
        let mut acc = ResilienceAccumulator::new(1.0);
        let mut t = 0.0;
        let mut gap = 1.0;
        acc.record(t).unwrap();
        let mut last_rate = f64::INFINITY;
        for _ in 0..40 {
            t += gap;
            gap *= 0.5;
            acc.record(t).unwrap();
            let adjusted =
                adjusted_decay_rate(2.0, acc.value(), DEFAULT_RESILIENCE_THRESHOLD).rate;
            assert!(adjusted < last_rate);
            last_rate = adjusted;
        }
        assert!(last_rate < 2.0 / 30.0);
    }

    #[test]
    fn monotone_decay_between_resets() {
        let curve = DecayCurve::ebbinghaus(0.31, 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let s = curve.strength(f64::from(i) * 0.17).unwrap();
            assert!(s <= prev);
            prev = s;
        }
    }
}
