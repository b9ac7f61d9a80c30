//! Bayesian recall updating.
//!
//! The conditional update rule `P(Pj|Pi) = L(Pi|Pj)·P(Pj) / P(Pi)`, the
//! posterior over a context (the normalizing sum over context members),
//! iterated reinforcement by prior replacement, and the Bayesian latency
//! and decay couplings.

use indexmap::IndexMap;
use thiserror::Error;

use crate::decay::{DecayCurve, DecayError};
use crate::hierarchy::RelationMatrix;
use crate::ids::PropId;
use crate::scenario::{BayesParams, PropositionRegistry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BayesError {
    #[error("evidence probability must be positive")]
    ZeroEvidence,
    #[error("context marginal is zero")]
    ZeroMarginal,
    #[error("context has no members")]
    EmptyContext,
    #[error("target `{0}` is not a member of the context")]
    TargetNotInContext(PropId),
    #[error("posterior must be positive")]
    ZeroPosterior,
}

/// Priors and likelihoods over a proposition set. Likelihood lookups are
/// keyed as `(observed, given)`; evidence is always recomputed per query,
/// never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeliefTable {
    priors: IndexMap<PropId, f64>,
    likelihoods: IndexMap<(PropId, PropId), f64>,
}

impl BeliefTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Uniform priors over `props`, likelihoods left empty.
    pub fn uniform(props: &[PropId]) -> Self {
        let n = props.len().max(1) as f64;
        Self {
            priors: props.iter().map(|p| (p.clone(), 1.0 / n)).collect(),
            likelihoods: IndexMap::new(),
        }
    }

    /// Table seeded from the scenario: explicit priors where given
    /// (uniform otherwise), explicit likelihoods where given (the
    /// relation matrix otherwise, so `L(a|b) = R(a,b)` and `L(a|a) = 1`).
    pub fn from_scenario(
        registry: &PropositionRegistry,
        matrix: &RelationMatrix,
        params: &BayesParams,
    ) -> Self {
        let ids: Vec<PropId> = registry.ids().cloned().collect();
        let mut table = Self::uniform(&ids);
        for (id, prior) in &params.priors {
            table.set_prior(id.clone(), *prior);
        }
        for observed in &ids {
            for given in &ids {
                table.set_likelihood(observed.clone(), given.clone(), matrix.relation(observed, given));
            }
        }
        for like in &params.likelihoods {
            table.set_likelihood(like.observed.clone(), like.given.clone(), like.p);
        }
        table
    }

    pub fn set_prior(&mut self, id: PropId, p: f64) {
        self.priors.insert(id, p);
    }

    pub fn prior(&self, id: &PropId) -> f64 {
        self.priors.get(id).copied().unwrap_or(0.0)
    }

    pub fn set_likelihood(&mut self, observed: PropId, given: PropId, p: f64) {
        self.likelihoods.insert((observed, given), p);
    }

    /// `P(observed | given)`; missing entries read as 0.
    pub fn likelihood(&self, observed: &PropId, given: &PropId) -> f64 {
        self.likelihoods
            .get(&(observed.clone(), given.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn priors(&self) -> impl Iterator<Item = (&PropId, f64)> {
        self.priors.iter().map(|(id, p)| (id, *p))
    }
}

/// Result of the conditional update rule; `clamped` warns that the raw
/// quotient exceeded 1 (an incoherent input triple).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditional {
    pub value: f64,
    pub clamped: bool,
}

/// `P(Pj|Pi) = likelihood · prior / evidence`, clamped into [0, 1].
pub fn bayes_conditional(
    likelihood: f64,
    prior: f64,
    evidence: f64,
) -> Result<Conditional, BayesError> {
    if !(evidence > 0.0) {
        return Err(BayesError::ZeroEvidence);
    }
    let raw = likelihood * prior / evidence;
    Ok(Conditional {
        value: raw.min(1.0),
        clamped: raw > 1.0,
    })
}

/// The posterior `P'(target | observed)` over a context: the likelihood–
/// prior product normalized by the sum over context members.
pub fn posterior_over_context(
    table: &BeliefTable,
    observed: &PropId,
    target: &PropId,
    members: &[PropId],
) -> Result<f64, BayesError> {
    if members.is_empty() {
        return Err(BayesError::EmptyContext);
    }
    if !members.contains(target) {
        return Err(BayesError::TargetNotInContext(target.clone()));
    }
    let marginal: f64 = members
        .iter()
        .map(|k| table.likelihood(observed, k) * table.prior(k))
        .sum();
    if !(marginal > 0.0) {
        return Err(BayesError::ZeroMarginal);
    }
    Ok(table.likelihood(observed, target) * table.prior(target) / marginal)
}

/// The full posterior distribution over context members.
pub fn posterior_distribution(
    table: &BeliefTable,
    observed: &PropId,
    members: &[PropId],
) -> Result<Vec<(PropId, f64)>, BayesError> {
    members
        .iter()
        .map(|m| posterior_over_context(table, observed, m, members).map(|p| (m.clone(), p)))
        .collect()
}

/// Iterated reinforcement: each iteration computes the posterior of
/// `target` given `observed` over the context, replaces the target's
/// prior with it, and renormalizes the remaining members' priors
/// proportionally. Returns the posterior sequence `P^(1) .. P^(n)`.
///
/// When the target's likelihood strictly dominates every other member's,
/// the sequence is non-decreasing and converges to 1.
pub fn iterate_recall_update(
    table: &BeliefTable,
    observed: &PropId,
    target: &PropId,
    members: &[PropId],
    iterations: usize,
) -> Result<Vec<f64>, BayesError> {
    let mut working = table.clone();
    let mut out = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let posterior = posterior_over_context(&working, observed, target, members)?;
        let others_sum: f64 = members
            .iter()
            .filter(|m| *m != target)
            .map(|m| working.prior(m))
            .sum();
        let scale = if others_sum > 0.0 {
            (1.0 - posterior) / others_sum
        } else {
            0.0
        };
        for m in members {
            if m != target {
                let scaled = working.prior(m) * scale;
                working.set_prior(m.clone(), scaled);
            }
        }
        working.set_prior(target.clone(), posterior);
        out.push(posterior);
    }
    Ok(out)
}

/// `T_R = T_B / posterior`, the Bayesian latency coupling.
pub fn bayesian_latency(base: f64, posterior: f64) -> Result<f64, BayesError> {
    if !(posterior > 0.0) {
        return Err(BayesError::ZeroPosterior);
    }
    Ok(base / posterior)
}

/// The Bayesian-modified decay strength `posterior · e^{-λ (t - t_r)}`.
pub fn bayesian_decay(posterior: f64, rate: f64, t: f64, t_r: f64) -> Result<f64, DecayError> {
    DecayCurve::bayesian(posterior, rate, t_r).strength(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn p(id: &str) -> PropId {
        PropId::new(id)
    }

    #[test]
    fn conditional_examples() {
        let c = bayes_conditional(0.8, 0.5, 0.4).unwrap();
        assert_eq!(c.value, 1.0);
        assert!(!c.clamped);
        let c = bayes_conditional(0.5, 0.2, 0.25).unwrap();
        assert!((c.value - 0.4).abs() < TOL);
        assert_eq!(bayes_conditional(0.5, 0.5, 0.0), Err(BayesError::ZeroEvidence));
    }

    #[test]
    fn conditional_clamps_incoherent_inputs() {
        let c = bayes_conditional(0.9, 0.9, 0.1).unwrap();
        assert_eq!(c.value, 1.0);
        assert!(c.clamped);
    }

    fn two_member_table() -> (BeliefTable, Vec<PropId>) {
        // L·prior products {0.4, 0.1} for observed "O".
        let mut table = BeliefTable::new();
        table.set_prior(p("A"), 0.5);
        table.set_prior(p("B"), 0.5);
        table.set_likelihood(p("O"), p("A"), 0.8);
        table.set_likelihood(p("O"), p("B"), 0.2);
        (table, vec![p("A"), p("B")])
    }

    #[test]
    fn posterior_normalizes_over_the_context() {
        let (table, members) = two_member_table();
        let post = posterior_over_context(&table, &p("O"), &p("A"), &members).unwrap();
        assert!((post - 0.8).abs() < TOL);
    }

    #[test]
    fn posterior_single_member_is_one() {
        let mut table = BeliefTable::new();
        table.set_prior(p("A"), 0.3);
        table.set_likelihood(p("O"), p("A"), 0.6);
        let post = posterior_over_context(&table, &p("O"), &p("A"), &[p("A")]).unwrap();
        assert_eq!(post, 1.0);
    }

    #[test]
    fn posterior_uniform_inputs_give_uniform_outputs() {
        let ids: Vec<PropId> = (0..5).map(|i| p(&format!("P{i}"))).collect();
        let mut table = BeliefTable::uniform(&ids);
        for id in &ids {
            table.set_likelihood(p("O"), id.clone(), 0.4);
        }
        for id in &ids {
            let post = posterior_over_context(&table, &p("O"), id, &ids).unwrap();
            assert!((post - 0.2).abs() < TOL);
        }
    }

    #[test]
    fn posterior_distribution_sums_to_one() {
        let (table, members) = two_member_table();
        let dist = posterior_distribution(&table, &p("O"), &members).unwrap();
        let sum: f64 = dist.iter().map(|(_, v)| v).sum();
        assert!((sum - 1.0).abs() < TOL);
    }

    #[test]
    fn posterior_error_cases() {
        let (table, members) = two_member_table();
        assert_eq!(
            posterior_over_context(&table, &p("O"), &p("A"), &[]),
            Err(BayesError::EmptyContext)
        );
        assert_eq!(
            posterior_over_context(&table, &p("O"), &p("X"), &members),
            Err(BayesError::TargetNotInContext(p("X")))
        );
        let empty = BeliefTable::new();
        assert_eq!(
            posterior_over_context(&empty, &p("O"), &p("A"), &[p("A")]),
            Err(BayesError::ZeroMarginal)
        );
    }

    /// Independent oracle: iterate the closed-form one-dimensional map
    /// `x' = L_t x / (L_t x + L̄ (1 - x))` where `L̄` is the
    /// prior-weighted mean likelihood of the other members (their relative
    /// weights are preserved by proportional renormalization).
    fn closed_form_sequence(
        likelihood_target: f64,
        likelihoods_others: &[f64],
        prior_target: f64,
        priors_others: &[f64],
        n: usize,
    ) -> Vec<f64> {
        let others_sum: f64 = priors_others.iter().sum();
        let weighted_mean: f64 = likelihoods_others
            .iter()
            .zip(priors_others)
            .map(|(l, w)| l * w / others_sum)
            .sum();
        let mut x = prior_target;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let denom = if i == 0 {
                // First step uses the raw priors, not yet renormalized.
                likelihood_target * x
                    + likelihoods_others
                        .iter()
                        .zip(priors_others)
                        .map(|(l, w)| l * w)
                        .sum::<f64>()
            } else {
                likelihood_target * x + weighted_mean * (1.0 - x)
            };
            x = likelihood_target * x / denom;
            out.push(x);
        }
        out
    }

    #[test]
    fn reinforcement_matches_the_closed_form_map() {
        let mut table = BeliefTable::new();
        table.set_prior(p("A"), 0.25);
        table.set_prior(p("B"), 0.45);
        table.set_prior(p("C"), 0.30);
        table.set_likelihood(p("O"), p("A"), 0.9);
        table.set_likelihood(p("O"), p("B"), 0.3);
        table.set_likelihood(p("O"), p("C"), 0.1);
        let members = vec![p("A"), p("B"), p("C")];
        let seq = iterate_recall_update(&table, &p("O"), &p("A"), &members, 30).unwrap();
        let oracle = closed_form_sequence(0.9, &[0.3, 0.1], 0.25, &[0.45, 0.30], 30);
        for (got, want) in seq.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn reinforcement_converges_for_dominant_likelihood() {
        let mut table = BeliefTable::new();
        table.set_prior(p("A"), 0.5);
        table.set_prior(p("B"), 0.5);
        table.set_likelihood(p("O"), p("A"), 0.9);
        table.set_likelihood(p("O"), p("B"), 0.1);
        let members = vec![p("A"), p("B")];
        let seq = iterate_recall_update(&table, &p("O"), &p("A"), &members, 20).unwrap();
        for w in seq.windows(2) {
            assert!(w[1] >= w[0] - TOL, "sequence must be non-decreasing");
        }
        assert!(*seq.last().unwrap() >= 0.999);
    }

    #[test]
    fn reinforcement_absorbing_prior_stays_at_one() {
        let mut table = BeliefTable::new();
        table.set_prior(p("A"), 1.0);
        table.set_prior(p("B"), 0.0);
        table.set_likelihood(p("O"), p("A"), 0.5);
        table.set_likelihood(p("O"), p("B"), 0.9);
        let members = vec![p("A"), p("B")];
        let seq = iterate_recall_update(&table, &p("O"), &p("A"), &members, 5).unwrap();
        assert!(seq.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn reinforcement_equal_likelihoods_do_not_reinforce() {
        let mut table = BeliefTable::new();
        for id in ["A", "B", "C"] {
            table.set_prior(p(id), 1.0 / 3.0);
            table.set_likelihood(p("O"), p(id), 0.4);
        }
        let members = vec![p("A"), p("B"), p("C")];
        let seq = iterate_recall_update(&table, &p("O"), &p("A"), &members, 10).unwrap();
        for &x in &seq {
            assert!((x - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bayesian_latency_examples() {
        assert_eq!(bayesian_latency(10.0, 1.0).unwrap(), 10.0);
        assert_eq!(bayesian_latency(10.0, 0.5).unwrap(), 20.0);
        assert_eq!(bayesian_latency(10.0, 0.0), Err(BayesError::ZeroPosterior));
    }

    #[test]
    fn bayesian_decay_examples() {
        assert_eq!(bayesian_decay(1.0, 2.0, 5.0, 5.0).unwrap(), 1.0);
        let expected = 0.294_303_552_937_154; // 0.8 e^{-1}
        assert!((bayesian_decay(0.8, 1.0, 1.0, 0.0).unwrap() - expected).abs() < 1e-12);
        assert_eq!(bayesian_decay(0.0, 1.0, 3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn scenario_defaults_fill_likelihoods_from_relations() {
        use crate::scenario::ScenarioConfig;
        let config = ScenarioConfig::from_json(
            r#"{
                "propositions": [
                    {"id": "P1", "base_latency": 1.0},
                    {"id": "P2", "base_latency": 1.0}
                ],
                "relations": [{"a": "P1", "b": "P2", "r": 0.7}],
                "horizon": 1.0,
                "dt": 1.0,
                "seed": 0
            }"#,
        )
        .unwrap();
        let table = BeliefTable::from_scenario(
            &config.registry(),
            &config.relation_matrix(),
            &config.params.bayes,
        );
        assert_eq!(table.likelihood(&p("P1"), &p("P2")), 0.7);
        assert_eq!(table.likelihood(&p("P1"), &p("P1")), 1.0);
        assert_eq!(table.prior(&p("P1")), 0.5);
    }
}
