//! Influence networks over positively related propositions.
//!
//! The influence network of a source proposition has as vertices every
//! proposition positively related to the source (the source itself is a
//! vertex through its unit self-relation) and as edges every positive
//! relation between vertices. Recursive influence sums the edge-weight
//! products of all simple indirect paths, damped exponentially in path
//! length; the direct edge is accounted separately by the total-influence
//! sum.

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

use crate::hierarchy::RelationMatrix;
use crate::ids::{ChainId, PropId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfluenceError {
    #[error("source latency must be positive")]
    NonPositiveLatency,
    #[error("no positive incoming influence")]
    NoIncomingInfluence,
    #[error("fixed-point iteration did not converge")]
    Divergence,
    #[error("path enumeration exceeded the cap of {cap} paths")]
    PathExplosion { cap: usize },
    #[error("total influence out of the source is zero")]
    ZeroTotalInfluence,
    #[error("proposition `{0}` is not assigned to any chain")]
    UnassignedChain(PropId),
    #[error("source and destination must differ")]
    SameVertex,
    #[error("value {0} out of [0,1]")]
    OutOfRange(f64),
}

/// The influence network of one source proposition.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceGraph {
    vertices: IndexSet<PropId>,
    neighbors: IndexMap<PropId, Vec<(PropId, f64)>>,
    lambda_path: f64,
    path_cap: usize,
}

impl InfluenceGraph {
    /// Builds the network for `source` over `universe` (in registry
    /// order): vertices are propositions with a positive relation to the
    /// source, edges are positive-relation vertex pairs weighted by R_C.
    pub fn for_source(
        matrix: &RelationMatrix,
        universe: &[PropId],
        source: &PropId,
        lambda_path: f64,
        path_cap: usize,
    ) -> Self {
        let vertices: IndexSet<PropId> = universe
            .iter()
            .filter(|p| matrix.relation(source, p) > 0.0)
            .cloned()
            .collect();
        let mut neighbors: IndexMap<PropId, Vec<(PropId, f64)>> = vertices
            .iter()
            .map(|v| (v.clone(), Vec::new()))
            .collect();
        for (i, a) in vertices.iter().enumerate() {
            for b in vertices.iter().skip(i + 1) {
                let w = matrix.relation(a, b);
                if w > 0.0 {
                    neighbors[a].push((b.clone(), w));
                    neighbors[b].push((a.clone(), w));
                }
            }
        }
        Self {
            vertices,
            neighbors,
            lambda_path,
            path_cap,
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = &PropId> {
        self.vertices.iter()
    }

    pub fn contains(&self, p: &PropId) -> bool {
        self.vertices.contains(p)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Direct edge weight between two vertices (0 when absent).
    pub fn direct(&self, a: &PropId, b: &PropId) -> f64 {
        self.neighbors
            .get(a)
            .and_then(|ns| ns.iter().find(|(n, _)| n == b))
            .map_or(0.0, |(_, w)| *w)
    }
}

/// `𝓘 = R_C / T_R(source)`: the rate at which a recalled proposition
/// pushes a related one toward realization.
pub fn simultaneous_influence(relation: f64, source_latency: f64) -> Result<f64, InfluenceError> {
    if !(source_latency > 0.0) {
        return Err(InfluenceError::NonPositiveLatency);
    }
    Ok(relation * (1.0 / source_latency))
}

/// The symmetrized influence for an entangled pair: the arithmetic mean of
/// the two directional values, reported in both directions.
pub fn entangled_influence(
    relation: f64,
    latency_a: f64,
    latency_b: f64,
) -> Result<f64, InfluenceError> {
    let ab = simultaneous_influence(relation, latency_a)?;
    let ba = simultaneous_influence(relation, latency_b)?;
    Ok((ab + ba) / 2.0)
}

/// `T_R = 1 / Σ incoming influence`.
pub fn cumulative_latency(incoming: &[f64]) -> Result<f64, InfluenceError> {
    let total: f64 = incoming.iter().sum();
    if !(total > 0.0) {
        return Err(InfluenceError::NoIncomingInfluence);
    }
    Ok(1.0 / total)
}

/// Fixed-point resolution of the mutual latency system: latencies feed
/// influences feed latencies until the largest component change drops
/// below `tol` (at most `max_iter` sweeps).
pub fn cumulative_latency_fixed_point(
    weights: &[Vec<f64>],
    initial: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, InfluenceError> {
    let n = initial.len();
    let mut latencies = initial.to_vec();
    for _ in 0..max_iter {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let incoming: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| weights[j][i] / latencies[j])
                .sum();
            if !(incoming > 0.0) {
                return Err(InfluenceError::NoIncomingInfluence);
            }
            next[i] = 1.0 / incoming;
        }
        let delta = latencies
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        latencies = next;
        if delta < tol {
            return Ok(latencies);
        }
    }
    Err(InfluenceError::Divergence)
}

/// `F = α_fb · R_C`.
pub fn feedback_influence(alpha_fb: f64, relation: f64) -> f64 {
    alpha_fb * relation
}

/// `T_R = T_B / (1 + F)`: feedback speeds recall toward zero latency.
pub fn feedback_latency(base: f64, feedback: f64) -> f64 {
    base / (1.0 + feedback)
}

/// Result of a path enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSum {
    pub value: f64,
    pub path_count: usize,
}

/// Recursive influence: the sum over simple *indirect* paths (two or more
/// edges) of the edge-weight product, damped by `e^{-λ_path |π|}`. The
/// single direct edge is excluded here; it is the separate direct term of
/// the total influence.
pub fn recursive_influence(
    graph: &InfluenceGraph,
    src: &PropId,
    dst: &PropId,
) -> Result<PathSum, InfluenceError> {
    if src == dst {
        return Err(InfluenceError::SameVertex);
    }
    if !graph.contains(src) || !graph.contains(dst) {
        return Ok(PathSum {
            value: 0.0,
            path_count: 0,
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut visited: IndexSet<PropId> = IndexSet::new();
    visited.insert(src.clone());
    dfs_paths(
        graph,
        src,
        dst,
        1.0,
        0,
        &mut visited,
        &mut sum,
        &mut count,
    )?;
    Ok(PathSum {
        value: sum,
        path_count: count,
    })
}

#[allow(clippy::too_many_arguments)]
fn dfs_paths(
    graph: &InfluenceGraph,
    current: &PropId,
    dst: &PropId,
    product: f64,
    edges: usize,
    visited: &mut IndexSet<PropId>,
    sum: &mut f64,
    count: &mut usize,
) -> Result<(), InfluenceError> {
    for (next, weight) in &graph.neighbors[current] {
        if next == dst {
            let length = edges + 1;
            if length >= 2 {
                *count += 1;
                if *count > graph.path_cap {
                    return Err(InfluenceError::PathExplosion {
                        cap: graph.path_cap,
                    });
                }
                *sum += product * weight * (-graph.lambda_path * length as f64).exp();
            }
            continue;
        }
        if visited.contains(next) {
            continue;
        }
        visited.insert(next.clone());
        dfs_paths(
            graph,
            next,
            dst,
            product * weight,
            edges + 1,
            visited,
            sum,
            count,
        )?;
        visited.pop();
    }
    Ok(())
}

/// Direct plus recursive influence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceBreakdown {
    pub direct: f64,
    pub recursive: f64,
    pub total: f64,
    /// Indirect paths, plus one when a direct edge exists.
    pub path_count: usize,
}

/// `𝓘_T = R_C + 𝓡`.
pub fn total_influence(
    graph: &InfluenceGraph,
    src: &PropId,
    dst: &PropId,
) -> Result<InfluenceBreakdown, InfluenceError> {
    let direct = graph.direct(src, dst);
    let recursive = recursive_influence(graph, src, dst)?;
    Ok(InfluenceBreakdown {
        direct,
        recursive: recursive.value,
        total: direct + recursive.value,
        path_count: recursive.path_count + usize::from(direct > 0.0),
    })
}

/// `P'(dst|src)`: total influence normalized over all potential targets
/// (every vertex other than the source).
pub fn updated_recall_probability(
    graph: &InfluenceGraph,
    src: &PropId,
    dst: &PropId,
) -> Result<f64, InfluenceError> {
    if src == dst {
        return Err(InfluenceError::SameVertex);
    }
    let dist = recall_distribution(graph, src)?;
    Ok(dist
        .iter()
        .find(|(id, _)| id == dst)
        .map_or(0.0, |(_, p)| *p))
}

/// The full updated-recall distribution over the source's potential
/// targets.
pub fn recall_distribution(
    graph: &InfluenceGraph,
    src: &PropId,
) -> Result<Vec<(PropId, f64)>, InfluenceError> {
    let mut totals = Vec::new();
    for v in graph.vertices() {
        if v == src {
            continue;
        }
        totals.push((v.clone(), total_influence(graph, src, v)?.total));
    }
    let denom: f64 = totals.iter().map(|(_, t)| t).sum();
    if !(denom > 0.0) {
        return Err(InfluenceError::ZeroTotalInfluence);
    }
    Ok(totals.into_iter().map(|(id, t)| (id, t / denom)).collect())
}

/// Eq.-style feedback adjustment of recall probabilities: raw values are
/// `(P' + F_R) / (1 + Σ F_R)` and need not form a distribution, so the
/// normalized column is also provided.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackAdjusted {
    pub prop: PropId,
    pub raw: f64,
    pub normalized: f64,
}

/// Feedback-adjusted recall probabilities over the source's targets.
/// `F_R(v) = Σ_q 𝓡(q → v)` sums recursive influence from every other
/// vertex; the denominator sums `F_R` over all vertices of the graph.
pub fn feedback_adjusted_probability(
    graph: &InfluenceGraph,
    src: &PropId,
) -> Result<Vec<FeedbackAdjusted>, InfluenceError> {
    let updated = recall_distribution(graph, src)?;
    let mut self_feedback: IndexMap<PropId, f64> = IndexMap::new();
    for v in graph.vertices() {
        let mut total = 0.0;
        for q in graph.vertices() {
            if q != v {
                total += recursive_influence(graph, q, v)?.value;
            }
        }
        self_feedback.insert(v.clone(), total);
    }
    let denom = 1.0 + self_feedback.values().sum::<f64>();
    let raw: Vec<(PropId, f64)> = updated
        .iter()
        .map(|(id, p)| (id.clone(), (p + self_feedback[id]) / denom))
        .collect();
    let raw_sum: f64 = raw.iter().map(|(_, r)| r).sum();
    Ok(raw
        .into_iter()
        .map(|(prop, r)| FeedbackAdjusted {
            prop,
            raw: r,
            normalized: r / raw_sum,
        })
        .collect())
}

/// Explicit chain partition from the scenario.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainPartition {
    chains: Vec<(ChainId, IndexSet<PropId>)>,
}

impl ChainPartition {
    pub fn new(chains: impl IntoIterator<Item = (ChainId, Vec<PropId>)>) -> Self {
        Self {
            chains: chains
                .into_iter()
                .map(|(id, members)| (id, members.into_iter().collect()))
                .collect(),
        }
    }

    pub fn chain_of(&self, p: &PropId) -> Option<&ChainId> {
        self.chains
            .iter()
            .find(|(_, members)| members.contains(p))
            .map(|(id, _)| id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ChainId, &IndexSet<PropId>)> {
        self.chains.iter().map(|(id, members)| (id, members))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainInfluence {
    pub value: f64,
    pub causal: bool,
    pub same_chain: bool,
}

/// Chain influence: within a chain the contextual relation (causal at or
/// above `tau_c`), across chains the attenuated universal relationship
/// (never causal).
pub fn chain_influence(
    partition: &ChainPartition,
    matrix: &RelationMatrix,
    a: &PropId,
    b: &PropId,
    epsilon_cross: f64,
    tau_c: f64,
) -> Result<ChainInfluence, InfluenceError> {
    let chain_a = partition
        .chain_of(a)
        .ok_or_else(|| InfluenceError::UnassignedChain(a.clone()))?;
    let chain_b = partition
        .chain_of(b)
        .ok_or_else(|| InfluenceError::UnassignedChain(b.clone()))?;
    if chain_a == chain_b {
        let value = matrix.relation(a, b);
        Ok(ChainInfluence {
            value,
            causal: value >= tau_c,
            same_chain: true,
        })
    } else {
        Ok(ChainInfluence {
            value: epsilon_cross * matrix.universal(a, b),
            causal: false,
            same_chain: false,
        })
    }
}

/// Imprecision of a retrieved approximation; at zero self-similarity the
/// state reports numbness (the superposition of the decayed amplitude and
/// bottom).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Imprecision {
    pub delta: f64,
    pub numbness: bool,
}

/// `δ = 1 - R_C(p, p')`.
pub fn imprecision(self_relation: f64) -> Result<Imprecision, InfluenceError> {
    if !(0.0..=1.0).contains(&self_relation) || self_relation.is_nan() {
        return Err(InfluenceError::OutOfRange(self_relation));
    }
    Ok(Imprecision {
        delta: 1.0 - self_relation,
        numbness: self_relation == 0.0,
    })
}

/// Imprecision under hierarchical decay of self-similarity:
/// `δ(t) = 1 - e^{-λ t}`.
pub fn imprecision_after(rate: f64, elapsed: f64) -> f64 {
    1.0 - (-rate * elapsed).exp()
}
