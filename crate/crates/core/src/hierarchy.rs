//! Hierarchical contexts as a containment DAG.
//!
//! Contexts are sets of propositions; a containment edge `(inner, outer)`
//! asserts `members(inner) ⊆ members(outer)`. Relations restricted to a
//! shared context drive entanglement (which closes upward through the
//! DAG) and recall propagation along containment paths.

use std::collections::BTreeSet;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ContextId, PropId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("unknown context `{0}`")]
    UnknownContext(ContextId),
    #[error("context `{inner}` is not contained in `{outer}`")]
    NotContained { inner: ContextId, outer: ContextId },
    #[error("proposition `{prop}` is not a member of context `{context}`")]
    NotAMember { prop: PropId, context: ContextId },
    #[error("path enumeration exceeded the cap of {cap} paths")]
    PathExplosion { cap: usize },
}

/// Pairwise relation strengths. Keys are unordered pairs; the
/// self-relation is fixed at 1 and missing pairs read as 0. Each entry
/// optionally carries a universal (cross-chain) strength.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelationMatrix {
    entries: IndexMap<(PropId, PropId), Weights>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Weights {
    r: f64,
    r_universal: f64,
}

fn pair_key(a: &PropId, b: &PropId) -> (PropId, PropId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl RelationMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &PropId, b: &PropId, r: f64, r_universal: f64) {
        self.entries.insert(pair_key(a, b), Weights { r, r_universal });
    }

    /// R(a, b): 1 for the self-relation, 0 for unrelated pairs.
    pub fn relation(&self, a: &PropId, b: &PropId) -> f64 {
        if a == b {
            return 1.0;
        }
        self.entries.get(&pair_key(a, b)).map_or(0.0, |w| w.r)
    }

    /// The universal relationship R_U(a, b) used for cross-chain links.
    pub fn universal(&self, a: &PropId, b: &PropId) -> f64 {
        if a == b {
            return 1.0;
        }
        self.entries
            .get(&pair_key(a, b))
            .map_or(0.0, |w| w.r_universal)
    }

    /// A proposition set is a memory chain when every distinct pair is
    /// positively related; singletons qualify vacuously.
    pub fn is_memory_chain(&self, props: &[PropId]) -> bool {
        for (i, a) in props.iter().enumerate() {
            for b in &props[i + 1..] {
                if self.relation(a, b) <= 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// The context hierarchy: members per context plus containment edges,
/// which must form a DAG.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContextHierarchy {
    members: IndexMap<ContextId, IndexSet<PropId>>,
    /// Adjacency along containment: `parents[c]` lists contexts directly
    /// containing `c`.
    parents: IndexMap<ContextId, Vec<ContextId>>,
}

impl ContextHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_context(&mut self, id: ContextId, members: impl IntoIterator<Item = PropId>) {
        self.members.insert(id.clone(), members.into_iter().collect());
        self.parents.entry(id).or_default();
    }

    /// Adds the containment edge `inner ⊆ outer`.
    pub fn add_containment(
        &mut self,
        inner: &ContextId,
        outer: &ContextId,
    ) -> Result<(), HierarchyError> {
        for id in [inner, outer] {
            if !self.members.contains_key(id) {
                return Err(HierarchyError::UnknownContext(id.clone()));
            }
        }
        self.parents
            .get_mut(inner)
            .expect("context registered above")
            .push(outer.clone());
        Ok(())
    }

    pub fn contexts(&self) -> impl Iterator<Item = &ContextId> {
        self.members.keys()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self, id: &ContextId) -> Result<&IndexSet<PropId>, HierarchyError> {
        self.members
            .get(id)
            .ok_or_else(|| HierarchyError::UnknownContext(id.clone()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&ContextId, &ContextId)> {
        self.parents
            .iter()
            .flat_map(|(inner, outers)| outers.iter().map(move |outer| (inner, outer)))
    }

    /// Kahn's algorithm over the containment edges.
    pub fn is_acyclic(&self) -> bool {
        let mut out_degree: IndexMap<&ContextId, usize> = self
            .parents
            .iter()
            .map(|(id, outers)| (id, outers.len()))
            .collect();
        let mut children: IndexMap<&ContextId, Vec<&ContextId>> = IndexMap::new();
        for (inner, outer) in self.edges() {
            children.entry(outer).or_default().push(inner);
        }
        let mut queue: Vec<&ContextId> = out_degree
            .iter()
            .filter(|(_, deg)| **deg == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut seen = 0usize;
        while let Some(id) = queue.pop() {
            seen += 1;
            for &child in children.get(id).into_iter().flatten() {
                let deg = out_degree.get_mut(child).expect("registered context");
                *deg -= 1;
                if *deg == 0 {
                    queue.push(child);
                }
            }
        }
        seen == self.members.len()
    }

    /// Containment edges whose subset invariant fails, as
    /// `(inner, outer, offending member)` triples.
    pub fn subset_violations(&self) -> Vec<(ContextId, ContextId, PropId)> {
        let mut out = Vec::new();
        for (inner, outer) in self.edges() {
            let inner_members = &self.members[inner];
            let outer_members = &self.members[outer];
            for p in inner_members {
                if !outer_members.contains(p) {
                    out.push((inner.clone(), outer.clone(), p.clone()));
                }
            }
        }
        out
    }

    /// All contexts transitively containing `id`, excluding `id` itself.
    pub fn ancestors(&self, id: &ContextId) -> Result<IndexSet<ContextId>, HierarchyError> {
        if !self.members.contains_key(id) {
            return Err(HierarchyError::UnknownContext(id.clone()));
        }
        let mut out: IndexSet<ContextId> = IndexSet::new();
        let mut frontier = vec![id.clone()];
        while let Some(current) = frontier.pop() {
            for parent in &self.parents[&current] {
                if out.insert(parent.clone()) {
                    frontier.push(parent.clone());
                }
            }
        }
        Ok(out)
    }

    /// Whether `inner` is transitively contained in `outer`.
    pub fn is_contained_in(
        &self,
        inner: &ContextId,
        outer: &ContextId,
    ) -> Result<bool, HierarchyError> {
        if !self.members.contains_key(outer) {
            return Err(HierarchyError::UnknownContext(outer.clone()));
        }
        Ok(self.ancestors(inner)?.contains(outer))
    }
}

/// R_C(a, b) within context `c`: the matrix value when both propositions
/// are members, and 0 otherwise.
pub fn contextual_relation(
    matrix: &RelationMatrix,
    hierarchy: &ContextHierarchy,
    a: &PropId,
    b: &PropId,
    context: &ContextId,
) -> Result<f64, HierarchyError> {
    let members = hierarchy.members(context)?;
    if members.contains(a) && members.contains(b) {
        Ok(matrix.relation(a, b))
    } else {
        Ok(0.0)
    }
}

/// Strict-threshold entanglement within a shared context.
pub fn entangled(
    matrix: &RelationMatrix,
    hierarchy: &ContextHierarchy,
    a: &PropId,
    b: &PropId,
    context: &ContextId,
    tau_e: f64,
) -> Result<bool, HierarchyError> {
    Ok(contextual_relation(matrix, hierarchy, a, b, context)? > tau_e)
}

/// An unordered proposition pair, normalized so `(a, b) == (b, a)`.
pub type PropPair = (PropId, PropId);

/// Every `(pair, context)` marking: pairs entangled in some context are
/// marked there and in every ancestor context.
pub fn entanglement_closure(
    hierarchy: &ContextHierarchy,
    matrix: &RelationMatrix,
    tau_e: f64,
) -> BTreeSet<(PropPair, ContextId)> {
    let mut out = BTreeSet::new();
    for context in hierarchy.contexts() {
        let members: Vec<&PropId> = hierarchy.members(context).expect("own context").iter().collect();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if matrix.relation(a, b) > tau_e {
                    let pair = pair_key(a, b);
                    out.insert((pair.clone(), context.clone()));
                    for ancestor in hierarchy.ancestors(context).expect("own context") {
                        out.insert((pair.clone(), ancestor));
                    }
                }
            }
        }
    }
    out
}

/// Whether recalling `a` in `inner` propagates to `b` in the broader
/// context `outer`: requires transitive containment and `R_C > tau` in
/// the broader context.
pub fn propagates(
    hierarchy: &ContextHierarchy,
    matrix: &RelationMatrix,
    a: &PropId,
    b: &PropId,
    inner: &ContextId,
    outer: &ContextId,
    tau: f64,
) -> Result<bool, HierarchyError> {
    if !hierarchy.is_contained_in(inner, outer)? {
        return Err(HierarchyError::NotContained {
            inner: inner.clone(),
            outer: outer.clone(),
        });
    }
    Ok(contextual_relation(matrix, hierarchy, a, b, outer)? > tau)
}

/// How the per-edge factor of a propagation path is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    /// Every edge contributes the single scalar R_C(a, b) evaluated in the
    /// target context, so a path of length L contributes `R_C^L`.
    #[default]
    Literal,
    /// Each edge `(inner, outer)` contributes R_C(a, b) evaluated in its
    /// own outer context.
    PerEdge,
}

/// Result of summing over containment paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOutcome {
    /// The path sum clamped to [0, 1].
    pub probability: f64,
    /// The unclamped path sum.
    pub raw_sum: f64,
    pub path_count: usize,
}

/// Probability that recalling `a` in `source` leads to recalling `b` in
/// `target`: the sum over containment paths of the per-edge products.
/// Paths have at least one edge. The raw sum can exceed 1 and is clamped;
/// enumeration aborts with [`HierarchyError::PathExplosion`] past `cap`.
pub fn recall_propagation_probability(
    hierarchy: &ContextHierarchy,
    matrix: &RelationMatrix,
    a: &PropId,
    b: &PropId,
    source: &ContextId,
    target: &ContextId,
    mode: PropagationMode,
    cap: usize,
) -> Result<PropagationOutcome, HierarchyError> {
    if !hierarchy.members(source)?.contains(a) {
        return Err(HierarchyError::NotAMember {
            prop: a.clone(),
            context: source.clone(),
        });
    }
    if !hierarchy.members(target)?.contains(b) {
        return Err(HierarchyError::NotAMember {
            prop: b.clone(),
            context: target.clone(),
        });
    }
    let literal_factor = contextual_relation(matrix, hierarchy, a, b, target)?;

    let mut raw_sum = 0.0;
    let mut path_count = 0usize;
    // Iterative DFS over the containment DAG; paths are simple because the
    // edge relation is acyclic.
    let mut stack: Vec<(ContextId, f64)> = vec![(source.clone(), 1.0)];
    while let Some((context, product)) = stack.pop() {
        for parent in &hierarchy.parents[&context] {
            let factor = match mode {
                PropagationMode::Literal => literal_factor,
                PropagationMode::PerEdge => {
                    contextual_relation(matrix, hierarchy, a, b, parent)?
                }
            };
            let next_product = product * factor;
            if parent == target {
                path_count += 1;
                if path_count > cap {
                    return Err(HierarchyError::PathExplosion { cap });
                }
                raw_sum += next_product;
            }
            stack.push((parent.clone(), next_product));
        }
    }
    Ok(PropagationOutcome {
        probability: raw_sum.clamp(0.0, 1.0),
        raw_sum,
        path_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: &str) -> PropId {
        PropId::new(id)
    }

    fn c(id: &str) -> ContextId {
        ContextId::new(id)
    }

    fn matrix(entries: &[(&str, &str, f64)]) -> RelationMatrix {
        let mut m = RelationMatrix::new();
        for (a, b, r) in entries {
            m.insert(&p(a), &p(b), *r, 0.0);
        }
        m
    }

    /// Chain C1 ⊆ C2 ⊆ C3 with shared members.
    fn chain_hierarchy() -> ContextHierarchy {
        let mut h = ContextHierarchy::new();
        h.add_context(c("C1"), [p("P1"), p("P2")]);
        h.add_context(c("C2"), [p("P1"), p("P2"), p("P3")]);
        h.add_context(c("C3"), [p("P1"), p("P2"), p("P3"), p("P4")]);
        h.add_containment(&c("C1"), &c("C2")).unwrap();
        h.add_containment(&c("C2"), &c("C3")).unwrap();
        h
    }

    /// Diamond: C_bot ⊆ {C_left, C_right} ⊆ C_top.
    fn diamond_hierarchy() -> ContextHierarchy {
        let mut h = ContextHierarchy::new();
        let members = [p("P1"), p("P2")];
        h.add_context(c("bot"), members.clone());
        h.add_context(c("left"), members.clone());
        h.add_context(c("right"), members.clone());
        h.add_context(c("top"), members);
        h.add_containment(&c("bot"), &c("left")).unwrap();
        h.add_containment(&c("bot"), &c("right")).unwrap();
        h.add_containment(&c("left"), &c("top")).unwrap();
        h.add_containment(&c("right"), &c("top")).unwrap();
        h
    }

    #[test]
    fn contextual_relation_passes_through_for_members() {
        let h = chain_hierarchy();
        let m = matrix(&[("P1", "P2", 0.7)]);
        let r = contextual_relation(&m, &h, &p("P1"), &p("P2"), &c("C1")).unwrap();
        assert_eq!(r, 0.7);
    }

    #[test]
    fn contextual_relation_is_zero_outside_the_context() {
        let h = chain_hierarchy();
        let m = matrix(&[("P1", "P3", 0.9)]);
        // P3 is not a member of C1.
        let r = contextual_relation(&m, &h, &p("P1"), &p("P3"), &c("C1")).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn unknown_context_is_an_error() {
        let h = chain_hierarchy();
        let m = matrix(&[]);
        assert_eq!(
            contextual_relation(&m, &h, &p("P1"), &p("P2"), &c("CX")),
            Err(HierarchyError::UnknownContext(c("CX")))
        );
    }

    #[test]
    fn memory_chain_requires_all_pairs_positive() {
        let m = matrix(&[("P1", "P2", 0.3), ("P2", "P3", 0.4)]);
        assert!(m.is_memory_chain(&[p("P1"), p("P2")]));
        // R(P1, P3) is missing, hence zero.
        assert!(!m.is_memory_chain(&[p("P1"), p("P2"), p("P3")]));
        assert!(m.is_memory_chain(&[p("P1")]));
    }

    #[test]
    fn entanglement_is_strict() {
        let h = chain_hierarchy();
        let m = matrix(&[("P1", "P2", 0.9)]);
        assert!(entangled(&m, &h, &p("P1"), &p("P2"), &c("C1"), 0.8).unwrap());
        let m_eq = matrix(&[("P1", "P2", 0.8)]);
        assert!(!entangled(&m_eq, &h, &p("P1"), &p("P2"), &c("C1"), 0.8).unwrap());
        // Outside the context R_C = 0.
        let m_out = matrix(&[("P1", "P3", 0.99)]);
        assert!(!entangled(&m_out, &h, &p("P1"), &p("P3"), &c("C1"), 0.8).unwrap());
    }

    /// Independent reachability oracle: BFS over explicitly materialized
    /// edges.
    fn bfs_ancestors(h: &ContextHierarchy, from: &ContextId) -> BTreeSet<ContextId> {
        let edges: Vec<(ContextId, ContextId)> = h
            .edges()
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        let mut seen = BTreeSet::new();
        let mut queue = vec![from.clone()];
        while let Some(current) = queue.pop() {
            for (inner, outer) in &edges {
                if *inner == current && seen.insert(outer.clone()) {
                    queue.push(outer.clone());
                }
            }
        }
        seen
    }

    #[test]
    fn closure_marks_all_ancestors_in_a_chain() {
        let h = chain_hierarchy();
        let m = matrix(&[("P1", "P2", 0.9)]);
        let closure = entanglement_closure(&h, &m, 0.8);
        let pair = (p("P1"), p("P2"));
        for ctx in ["C1", "C2", "C3"] {
            assert!(closure.contains(&(pair.clone(), c(ctx))), "missing {ctx}");
        }
        assert_eq!(closure.len(), 3);
    }

    #[test]
    fn closure_covers_a_diamond() {
        let h = diamond_hierarchy();
        let m = matrix(&[("P1", "P2", 0.95)]);
        let closure = entanglement_closure(&h, &m, 0.9);
        let pair = (p("P1"), p("P2"));
        // Entangled in every context here (shared members), so 4 marks.
        assert_eq!(closure.len(), 4);
        // Marked ancestors agree with the BFS oracle from the bottom.
        let oracle = bfs_ancestors(&h, &c("bot"));
        for ctx in oracle {
            assert!(closure.contains(&(pair.clone(), ctx)));
        }
    }

    #[test]
    fn closure_is_empty_without_entanglement() {
        let h = chain_hierarchy();
        let m = matrix(&[("P1", "P2", 0.2)]);
        assert!(entanglement_closure(&h, &m, 0.8).is_empty());
    }

    #[test]
    fn propagation_single_edge() {
        let h = chain_hierarchy();
        let m = matrix(&[("P1", "P2", 0.6)]);
        let outcome = recall_propagation_probability(
            &h,
            &m,
            &p("P1"),
            &p("P2"),
            &c("C1"),
            &c("C2"),
            PropagationMode::Literal,
            1_000_000,
        )
        .unwrap();
        assert_eq!(outcome.path_count, 1);
        assert!((outcome.probability - 0.6).abs() < 1e-12);
    }

    #[test]
    fn propagation_two_parallel_paths() {
        let h = diamond_hierarchy();
        let m = matrix(&[("P1", "P2", 0.5)]);
        let outcome = recall_propagation_probability(
            &h,
            &m,
            &p("P1"),
            &p("P2"),
            &c("bot"),
            &c("top"),
            PropagationMode::Literal,
            1_000_000,
        )
        .unwrap();
        assert_eq!(outcome.path_count, 2);
        assert!((outcome.probability - 0.5).abs() < 1e-12);
        assert!((outcome.raw_sum - 0.5).abs() < 1e-12);
    }

    #[test]
    fn propagation_annihilates_at_zero_relation() {
        let h = chain_hierarchy();
        let m = matrix(&[]);
        let outcome = recall_propagation_probability(
            &h,
            &m,
            &p("P1"),
            &p("P2"),
            &c("C1"),
            &c("C3"),
            PropagationMode::Literal,
            1_000_000,
        )
        .unwrap();
        assert_eq!(outcome.probability, 0.0);
    }

    #[test]
    fn propagation_positivity() {
        let h = diamond_hierarchy();
        let m = matrix(&[("P1", "P2", 0.01)]);
        let outcome = recall_propagation_probability(
            &h,
            &m,
            &p("P1"),
            &p("P2"),
            &c("bot"),
            &c("top"),
            PropagationMode::Literal,
            1_000_000,
        )
        .unwrap();
        assert!(outcome.probability > 0.0);
    }

    #[test]
    fn propagation_raw_sum_can_exceed_one_but_probability_clamps() {
        // Wide diamond: many parallel 2-edge paths with high relation.
        let mut h = ContextHierarchy::new();
        let members = [p("P1"), p("P2")];
        h.add_context(c("bot"), members.clone());
        h.add_context(c("top"), members.clone());
        for i in 0..6 {
            let mid = c(&format!("mid{i}"));
            h.add_context(mid.clone(), members.clone());
            h.add_containment(&c("bot"), &mid).unwrap();
            h.add_containment(&mid, &c("top")).unwrap();
        }
        let m = matrix(&[("P1", "P2", 0.9)]);
        let outcome = recall_propagation_probability(
            &h,
            &m,
            &p("P1"),
            &p("P2"),
            &c("bot"),
            &c("top"),
            PropagationMode::Literal,
            1_000_000,
        )
        .unwrap();
        assert_eq!(outcome.path_count, 6);
        assert!(outcome.raw_sum > 1.0);
        assert_eq!(outcome.probability, 1.0);
    }

    #[test]
    fn propagation_cap_fires() {
        let h = diamond_hierarchy();
        let m = matrix(&[("P1", "P2", 0.5)]);
        let err = recall_propagation_probability(
            &h,
            &m,
            &p("P1"),
            &p("P2"),
            &c("bot"),
            &c("top"),
            PropagationMode::Literal,
            1,
        )
        .unwrap_err();
        assert_eq!(err, HierarchyError::PathExplosion { cap: 1 });
    }

    #[test]
    fn propagates_requires_containment_and_threshold() {
        let h = chain_hierarchy();
        let m = matrix(&[("P1", "P2", 0.5)]);
        assert!(propagates(&h, &m, &p("P1"), &p("P2"), &c("C1"), &c("C2"), 0.3).unwrap());
        // Strict comparison at the boundary.
        assert!(!propagates(&h, &m, &p("P1"), &p("P2"), &c("C1"), &c("C2"), 0.5).unwrap());
        // C1 is not an ancestor of itself, and C3 does not contain C3.
        assert_eq!(
            propagates(&h, &m, &p("P1"), &p("P2"), &c("C3"), &c("C1"), 0.3),
            Err(HierarchyError::NotContained {
                inner: c("C3"),
                outer: c("C1"),
            })
        );
    }

    #[test]
    fn acyclicity_detects_a_cycle() {
        let mut h = ContextHierarchy::new();
        h.add_context(c("A"), [p("P1")]);
        h.add_context(c("B"), [p("P1")]);
        h.add_containment(&c("A"), &c("B")).unwrap();
        assert!(h.is_acyclic());
        h.add_containment(&c("B"), &c("A")).unwrap();
        assert!(!h.is_acyclic());
    }

    #[test]
    fn subset_violations_are_reported() {
        let mut h = ContextHierarchy::new();
        h.add_context(c("A"), [p("P1"), p("P2")]);
        h.add_context(c("B"), [p("P1")]);
        h.add_containment(&c("A"), &c("B")).unwrap();
        let violations = h.subset_violations();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].2, p("P2"));
    }
}
