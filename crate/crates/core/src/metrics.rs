//! Entropy-based organization metrics for memory chains.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ChainId, PropId};

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("entropy must be non-negative")]
    NegativeEntropy,
    #[error("chain has no members")]
    EmptyChain,
    #[error("need at least two chains with finite latencies")]
    InsufficientData,
}

/// A recall distribution over the members of a chain. Probabilities must
/// sum to 1 within 1e-12; entropy is reported in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDistribution {
    ids: Vec<PropId>,
    probs: Vec<f64>,
}

impl ChainDistribution {
    pub fn new(ids: Vec<PropId>, probs: Vec<f64>) -> Result<Self, MetricsError> {
        if ids.is_empty() {
            return Err(MetricsError::EmptyChain);
        }
        if ids.len() != probs.len() {
            return Err(MetricsError::InvalidDistribution(format!(
                "{} members but {} probabilities",
                ids.len(),
                probs.len()
            )));
        }
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(MetricsError::InvalidDistribution(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(MetricsError::InvalidDistribution(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { ids, probs })
    }

    pub fn ids(&self) -> &[PropId] {
        &self.ids
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Shannon entropy in bits, with `0 · log 0 = 0`.
    pub fn entropy_bits(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }
}

/// `E = 1 / (1 + H)`.
pub fn recall_efficiency(entropy_bits: f64) -> Result<f64, MetricsError> {
    if entropy_bits < 0.0 || entropy_bits.is_nan() {
        return Err(MetricsError::NegativeEntropy);
    }
    Ok(1.0 / (1.0 + entropy_bits))
}

/// Sign convention for the softmax recall distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimalSign {
    /// `p ∝ e^{-β s}`: higher relation scores get lower probability, as
    /// written.
    #[default]
    Literal,
    /// `p ∝ e^{+β s}`: the sign-flipped variant.
    Flipped,
}

/// The softmax distribution `p(P_i) = e^{∓β s_i} / Z` over per-member
/// relation scores. Shift-invariant in the scores; `β = 0` is uniform.
pub fn optimal_distribution(
    scores: &[(PropId, f64)],
    beta: f64,
    sign: OptimalSign,
) -> Result<ChainDistribution, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyChain);
    }
    let signed: Vec<f64> = scores
        .iter()
        .map(|(_, s)| match sign {
            OptimalSign::Literal => -beta * s,
            OptimalSign::Flipped => beta * s,
        })
        .collect();
    let max = signed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = signed.iter().map(|&x| (x - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    ChainDistribution::new(scores.iter().map(|(id, _)| id.clone()).collect(), probs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub chain_id: ChainId,
    pub entropy_bits: f64,
    pub efficiency: f64,
    pub mean_latency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyLatencyReport {
    pub rows: Vec<ChainReport>,
    /// Spearman rank correlation between chain entropy and mean latency;
    /// `None` when either variable has no variance.
    pub rank_correlation: Option<f64>,
}

/// Per-chain entropy and mean recall latency, plus their rank
/// correlation. Chains contribute only their finite latencies; chains
/// without any are dropped, and fewer than two surviving chains is an
/// error.
pub fn entropy_latency_report(
    chains: &[(ChainId, ChainDistribution, Vec<f64>)],
) -> Result<EntropyLatencyReport, MetricsError> {
    let mut rows = Vec::new();
    for (id, dist, latencies) in chains {
        let finite: Vec<f64> = latencies.iter().copied().filter(|t| t.is_finite()).collect();
        if finite.is_empty() {
            continue;
        }
        let entropy = dist.entropy_bits();
        rows.push(ChainReport {
            chain_id: id.clone(),
            entropy_bits: entropy,
            efficiency: recall_efficiency(entropy)?,
            mean_latency: finite.iter().sum::<f64>() / finite.len() as f64,
        });
    }
    if rows.len() < 2 {
        return Err(MetricsError::InsufficientData);
    }
    let entropies: Vec<f64> = rows.iter().map(|r| r.entropy_bits).collect();
    let latencies: Vec<f64> = rows.iter().map(|r| r.mean_latency).collect();
    Ok(EntropyLatencyReport {
        rank_correlation: spearman(&entropies, &latencies),
        rows,
    })
}

/// Average ranks (1-based), ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `None` when either side has zero rank
/// variance.
fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mean_x = rx.iter().sum::<f64>() / n;
    let mean_y = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    let denom = (var_x * var_y).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some(cov / denom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: &str) -> PropId {
        PropId::new(id)
    }

    fn dist(probs: &[f64]) -> ChainDistribution {
        let ids = (0..probs.len()).map(|i| p(&format!("P{i}"))).collect();
        ChainDistribution::new(ids, probs.to_vec()).unwrap()
    }

    #[test]
    fn uniform_over_four_is_two_bits_exactly() {
        assert_eq!(dist(&[0.25; 4]).entropy_bits(), 2.0);
    }

    #[test]
    fn point_mass_has_zero_entropy() {
        assert_eq!(dist(&[1.0, 0.0, 0.0]).entropy_bits(), 0.0);
    }

    #[test]
    fn half_quarter_quarter_is_one_and_a_half_bits() {
        assert_eq!(dist(&[0.5, 0.25, 0.25]).entropy_bits(), 1.5);
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(matches!(
            ChainDistribution::new(vec![p("P0")], vec![0.5]),
            Err(MetricsError::InvalidDistribution(_))
        ));
        assert!(matches!(
            ChainDistribution::new(vec![], vec![]),
            Err(MetricsError::EmptyChain)
        ));
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(recall_efficiency(0.0).unwrap(), 1.0);
        assert_eq!(recall_efficiency(1.0).unwrap(), 0.5);
        assert_eq!(recall_efficiency(3.0).unwrap(), 0.25);
        assert_eq!(recall_efficiency(-0.1), Err(MetricsError::NegativeEntropy));
    }

    #[test]
    fn entropy_bounds() {
        // 0 ≤ H ≤ log2 n with the equality cases.
        for n in 1..8usize {
            let uniform = dist(&vec![1.0 / n as f64; n]);
            assert!((uniform.entropy_bits() - (n as f64).log2()).abs() < 1e-9);
            let mut point = vec![0.0; n];
            point[0] = 1.0;
            assert_eq!(dist(&point).entropy_bits(), 0.0);
        }
    }

    #[test]
    fn beta_zero_is_uniform() {
        let scores: Vec<(PropId, f64)> =
            (0..4).map(|i| (p(&format!("P{i}")), f64::from(i))).collect();
        let d = optimal_distribution(&scores, 0.0, OptimalSign::Literal).unwrap();
        for &prob in d.probs() {
            assert!((prob - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn literal_sign_prefers_low_scores() {
        // Scores {0, 1} at β = ln 2: weights {1, 1/2} → p = {2/3, 1/3}.
        let scores = vec![(p("A"), 0.0), (p("B"), 1.0)];
        let d = optimal_distribution(&scores, 2f64.ln(), OptimalSign::Literal).unwrap();
        assert!((d.probs()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.probs()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn flipped_sign_prefers_high_scores() {
        let scores = vec![(p("A"), 0.0), (p("B"), 1.0)];
        let d = optimal_distribution(&scores, 2f64.ln(), OptimalSign::Flipped).unwrap();
        assert!((d.probs()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((d.probs()[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_member_gets_probability_one() {
        let d = optimal_distribution(&[(p("A"), 0.7)], 3.0, OptimalSign::Literal).unwrap();
        assert_eq!(d.probs(), &[1.0]);
    }

    #[test]
    fn empty_scores_are_rejected() {
        assert_eq!(
            optimal_distribution(&[], 1.0, OptimalSign::Literal),
            Err(MetricsError::EmptyChain)
        );
    }

    #[test]
    fn report_orders_entropy_with_latency() {
        // Constructed so the relation form forces the ordering: the
        // higher-entropy chain has the longer mean latency.
        let low_entropy = dist(&[0.7, 0.2, 0.1]);
        let high_entropy = dist(&[1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0]);
        let chains = vec![
            (ChainId::new("A"), low_entropy, vec![1.0, 1.2, 1.1]),
            (ChainId::new("B"), high_entropy, vec![5.0, 4.8, 5.2]),
        ];
        let report = entropy_latency_report(&chains).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rank_correlation, Some(1.0));
    }

    #[test]
    fn report_requires_two_chains() {
        let chains = vec![(ChainId::new("A"), dist(&[1.0]), vec![1.0])];
        assert_eq!(
            entropy_latency_report(&chains),
            Err(MetricsError::InsufficientData)
        );
    }

    #[test]
    fn identical_chains_yield_undefined_correlation() {
        let chains = vec![
            (ChainId::new("A"), dist(&[0.5, 0.5]), vec![2.0]),
            (ChainId::new("B"), dist(&[0.5, 0.5]), vec![2.0]),
        ];
        let report = entropy_latency_report(&chains).unwrap();
        assert_eq!(report.rank_correlation, None);
    }

    #[test]
    fn infinite_latencies_are_ignored() {
        let chains = vec![
            (
                ChainId::new("A"),
                dist(&[0.5, 0.5]),
                vec![1.0, f64::INFINITY],
            ),
            (ChainId::new("B"), dist(&[1.0]), vec![3.0]),
        ];
        let report = entropy_latency_report(&chains).unwrap();
        assert_eq!(report.rows[0].mean_latency, 1.0);
    }
}
