//! SLCA computation and maintenance of the distinct result set.
//!
//! `compute_slca` is driven by the shortest list: for every node `v` in it,
//! each other list is probed by binary search for its closest neighbours
//! around `v`, which gives the deepest ancestor-or-self of `v` whose subtree
//! holds a node of that list. The shallowest of those depths is the deepest
//! node above `v` covering every list. Dropping candidates that have a
//! candidate below them leaves exactly the SLCA set, at a cost of
//! `O(|L1| * sum_i log |Li|)` plus sorting the candidates.

use std::collections::{BTreeMap, BTreeSet};

use crate::dewey::{is_strictly_sorted, DeweyId};

/// Identifier of an evaluated intent; its position in enumeration order.
pub type IntentId = usize;

/// Document-ordered, duplicate-free set with no ancestor/descendant pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlcaSet {
    nodes: Vec<DeweyId>,
}

impl SlcaSet {
    pub fn empty() -> Self {
        SlcaSet::default()
    }

    /// Sorts `nodes` and drops duplicates and every node that has a
    /// descendant in the set.
    pub fn minimal(mut nodes: Vec<DeweyId>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        let mut kept = Vec::with_capacity(nodes.len());
        for i in 0..nodes.len() {
            // descendants of a node follow it immediately in document order
            let has_descendant = nodes
                .get(i + 1)
                .is_some_and(|next| nodes[i].is_ancestor_of(next));
            if !has_descendant {
                kept.push(nodes[i].clone());
            }
        }
        SlcaSet { nodes: kept }
    }

    /// Wraps `nodes` if it already satisfies the set invariants.
    pub fn from_sorted(nodes: Vec<DeweyId>) -> Option<Self> {
        let ok =
            is_strictly_sorted(&nodes) && nodes.windows(2).all(|w| !w[0].is_ancestor_of(&w[1]));
        ok.then_some(SlcaSet { nodes })
    }

    pub fn nodes(&self) -> &[DeweyId] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<DeweyId> {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Depth of the deepest ancestor-or-self of `node` whose subtree contains a
/// member of `list`, or 0 when none does (only possible for foreign roots).
pub(crate) fn deepest_cover_depth(node: &DeweyId, list: &[DeweyId]) -> usize {
    let p = list.partition_point(|x| x < node);
    if let Some(next) = list.get(p) {
        if node.is_ancestor_or_self_of(next) {
            return node.depth();
        }
    }
    let right = list.get(p).map_or(0, |x| node.common_prefix_len(x));
    let left = if p > 0 {
        node.common_prefix_len(&list[p - 1])
    } else {
        0
    };
    right.max(left)
}

/// Deepest ancestor-or-self of `node` whose subtree meets every list.
pub fn covering_ancestor<L: AsRef<[DeweyId]>>(lists: &[L], node: &DeweyId) -> Option<DeweyId> {
    let mut depth = node.depth();
    for list in lists {
        depth = depth.min(deepest_cover_depth(node, list.as_ref()));
        if depth == 0 {
            return None;
        }
    }
    Some(node.prefix(depth))
}

/// SLCA of document-ordered, duplicate-free node lists.
///
/// Returns the empty set when `lists` is empty or any list is empty.
pub fn compute_slca<L: AsRef<[DeweyId]>>(lists: &[L]) -> SlcaSet {
    let Some(driver) = lists.iter().map(AsRef::as_ref).min_by_key(|l| l.len()) else {
        return SlcaSet::empty();
    };
    if driver.is_empty() {
        return SlcaSet::empty();
    }
    let candidates: Vec<DeweyId> = driver
        .iter()
        .filter_map(|v| covering_ancestor(lists, v))
        .collect();
    SlcaSet::minimal(candidates)
}

/// Result of comparing a fresh SLCA set against the distinct set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MergePreview {
    /// Fresh nodes that are neither duplicates nor ancestors of a current member.
    pub inserted: Vec<DeweyId>,
    /// Current members that are ancestors of an inserted node.
    pub replaced: Vec<DeweyId>,
    pub union_size: usize,
}

impl MergePreview {
    pub fn distinct_count(&self) -> usize {
        self.inserted.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeOutcome {
    pub distinct_count: usize,
    pub union_size: usize,
}

/// The running distinct result set, with the intent that contributed each node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiversifiedSet {
    nodes: BTreeMap<DeweyId, IntentId>,
}

impl DiversifiedSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: &DeweyId) -> bool {
        self.nodes.contains_key(node)
    }

    pub fn attribution(&self, node: &DeweyId) -> Option<IntentId> {
        self.nodes.get(node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DeweyId, IntentId)> {
        self.nodes.iter().map(|(d, i)| (d, *i))
    }

    /// Members in document order, as an SLCA set.
    pub fn as_slca_set(&self) -> SlcaSet {
        SlcaSet {
            nodes: self.nodes.keys().cloned().collect(),
        }
    }

    /// Is `node` equal to, or an ancestor of, some member?
    pub fn dominates(&self, node: &DeweyId) -> bool {
        self.nodes
            .range(node..)
            .next()
            .is_some_and(|(d, _)| node.is_ancestor_or_self_of(d))
    }

    /// The member that is a proper ancestor of `node`, if any. With no
    /// ancestor/descendant pairs among members it is the document-order predecessor.
    pub fn ancestor_of(&self, node: &DeweyId) -> Option<&DeweyId> {
        self.nodes
            .range(..node)
            .next_back()
            .map(|(d, _)| d)
            .filter(|d| d.is_ancestor_of(node))
    }

    /// Dry run of [`merge_distinct`].
    pub fn preview(&self, fresh: &SlcaSet) -> MergePreview {
        let mut inserted = Vec::new();
        let mut replaced = BTreeSet::new();
        for v in fresh.nodes() {
            if self.dominates(v) {
                continue;
            }
            if let Some(anc) = self.ancestor_of(v) {
                replaced.insert(anc.clone());
            }
            inserted.push(v.clone());
        }
        let union_size = self.nodes.len() - replaced.len() + inserted.len();
        MergePreview {
            inserted,
            replaced: replaced.into_iter().collect(),
            union_size,
        }
    }

    /// Removes `replaced` members (missing ones are ignored) and adds `inserted`
    /// under `intent`. The caller guarantees `inserted` is not dominated by the
    /// remaining members.
    pub fn apply(&mut self, inserted: &[DeweyId], replaced: &[DeweyId], intent: IntentId) {
        for r in replaced {
            self.nodes.remove(r);
        }
        for v in inserted {
            debug_assert!(!self.dominates(v));
            debug_assert!(self.ancestor_of(v).is_none());
            self.nodes.insert(v.clone(), intent);
        }
    }

    /// Drops every member contributed by `intent`.
    pub fn remove_intent(&mut self, intent: IntentId) {
        self.nodes.retain(|_, owner| *owner != intent);
    }

    /// True when no two members are in an ancestor/descendant relation.
    pub fn is_consistent(&self) -> bool {
        let keys: Vec<&DeweyId> = self.nodes.keys().collect();
        keys.windows(2).all(|w| !w[0].is_ancestor_of(w[1]))
    }
}

/// Adds the new and more specific nodes of `fresh` to `phi`.
///
/// A fresh node equal to or above a member is dropped; one below a member
/// replaces it; any other node is added.
pub fn merge_distinct(phi: &mut DiversifiedSet, fresh: &SlcaSet, intent: IntentId) -> MergeOutcome {
    let preview = phi.preview(fresh);
    phi.apply(&preview.inserted, &preview.replaced, intent);
    debug_assert_eq!(phi.len(), preview.union_size);
    MergeOutcome {
        distinct_count: preview.distinct_count(),
        union_size: preview.union_size,
    }
}
