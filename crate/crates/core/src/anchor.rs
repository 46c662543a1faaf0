//! Anchor-based evaluation.
//!
//! The members of the distinct set act as anchors. Relative to one anchor,
//! every node of a new intent is an ancestor-or-self (it can only produce
//! duplicates or ancestors, so it is discarded), a preceding node, a
//! descendant, or a following node. Partitioning the following nodes again
//! by the next anchor, in document order, yields at most `2|A| + 1` areas,
//! and no new result can combine nodes from two different areas. Areas where
//! some segment has no node are skipped outright.
//!
//! The anchors are a snapshot of the distinct set before the intent; any
//! anchor with a new result below it is replaced once the intent is admitted.
//!
//! Relevance needs the size of the intent's full SLCA set, which also counts
//! results lying on or above an anchor. At most one such result exists per
//! anchor: the deepest ancestor-or-self of the anchor covering every list,
//! provided no other covering node lies below it. Those covers are found by
//! binary search on the segment lists, without scanning any area.

use std::borrow::Cow;

use crate::dewey::{subtree_end, DeweyId};
use crate::diversify::{
    likelihood, run_top_k, Commit, DiversifyParams, EvalStats, IntentEval, TopK,
};
use crate::error::QueryError;
use crate::features::build_matrix;
use crate::index::IndexBundle;
use crate::intent::{resolve_segment, IntentGenerator, Segment};
use crate::slca::{compute_slca, covering_ancestor, SlcaSet};

/// One list split around a single anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AreaPartition<'a> {
    pub anchor: DeweyId,
    pub pre: Vec<Cow<'a, [DeweyId]>>,
    pub des: Vec<Cow<'a, [DeweyId]>>,
    pub next: Vec<&'a [DeweyId]>,
    /// Nodes equal to or above the anchor, discarded.
    pub anc_count: usize,
}

fn split_list<'a>(
    list: &'a [DeweyId],
    anchor: &DeweyId,
) -> (Cow<'a, [DeweyId]>, &'a [DeweyId], &'a [DeweyId], usize) {
    let lb = list.partition_point(|x| x < anchor);
    let head = &list[..lb];
    // ancestors of the anchor precede it; there is at most one per depth
    let target = anchor.components();
    let mut ancestors: Vec<usize> = (1..anchor.depth())
        .filter_map(|d| {
            head.binary_search_by(|x| x.components().cmp(&target[..d]))
                .ok()
        })
        .collect();
    ancestors.sort_unstable();
    let pre = if ancestors.is_empty() {
        Cow::Borrowed(head)
    } else {
        Cow::Owned(
            head.iter()
                .enumerate()
                .filter(|(i, _)| ancestors.binary_search(i).is_err())
                .map(|(_, x)| x.clone())
                .collect(),
        )
    };
    let equal = usize::from(list.get(lb) == Some(anchor));
    let end = subtree_end(list, lb, anchor);
    (
        pre,
        &list[lb + equal..end],
        &list[end..],
        ancestors.len() + equal,
    )
}

/// Splits every list into the preceding, descendant and following areas of `anchor`.
pub fn partition_by_anchor<'a>(lists: &[&'a [DeweyId]], anchor: &DeweyId) -> AreaPartition<'a> {
    let mut part = AreaPartition {
        anchor: anchor.clone(),
        pre: Vec::with_capacity(lists.len()),
        des: Vec::with_capacity(lists.len()),
        next: Vec::with_capacity(lists.len()),
        anc_count: 0,
    };
    for list in lists {
        let (pre, des, next, anc) = split_list(list, anchor);
        part.pre.push(pre);
        part.des.push(Cow::Borrowed(des));
        part.next.push(next);
        part.anc_count += anc;
    }
    part
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AreaKind {
    /// Nodes before anchor `i` (and after anchor `i - 1`'s subtree).
    Pre(usize),
    /// Nodes strictly inside anchor `i`'s subtree.
    Des(usize),
    /// Everything after the last anchor processed.
    Next,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Area<'a> {
    pub kind: AreaKind,
    /// One sublist per segment, document-ordered.
    pub lists: Vec<Cow<'a, [DeweyId]>>,
}

impl Area<'_> {
    pub fn node_count(&self) -> usize {
        self.lists.iter().map(|l| l.len()).sum()
    }

    pub fn is_prunable(&self) -> bool {
        self.lists.iter().any(|l| l.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AreaPlan<'a> {
    /// Areas in document order: pre_1, des_1, pre_2, des_2, ..., next.
    pub areas: Vec<Area<'a>>,
    /// Nodes discarded as ancestors-or-self of an anchor.
    pub discarded: usize,
}

/// Partitions `lists` by each anchor in document order, always splitting the
/// running "following" remainder. Stops early once some segment has nothing
/// left after an anchor, because no later area can then cover every segment.
pub fn partition_by_anchors<'a>(lists: &[&'a [DeweyId]], anchors: &[DeweyId]) -> AreaPlan<'a> {
    let mut areas = Vec::with_capacity(2 * anchors.len() + 1);
    let mut discarded = 0;
    let mut rest: Vec<&'a [DeweyId]> = lists.to_vec();
    for (i, anchor) in anchors.iter().enumerate() {
        let part = partition_by_anchor(&rest, anchor);
        discarded += part.anc_count;
        areas.push(Area {
            kind: AreaKind::Pre(i),
            lists: part.pre,
        });
        areas.push(Area {
            kind: AreaKind::Des(i),
            lists: part.des,
        });
        rest = part.next;
        if rest.iter().any(|l| l.is_empty()) {
            break;
        }
    }
    areas.push(Area {
        kind: AreaKind::Next,
        lists: rest.into_iter().map(Cow::Borrowed).collect(),
    });
    AreaPlan { areas, discarded }
}

/// Drops every area in which some segment has no node.
pub fn prune_empty_areas(areas: Vec<Area<'_>>) -> (Vec<Area<'_>>, EvalStats) {
    let mut stats = EvalStats::default();
    let kept = areas
        .into_iter()
        .filter(|a| {
            if a.is_prunable() {
                stats.nodes_pruned += a.node_count() as u64;
                stats.areas_skipped += 1;
                false
            } else {
                true
            }
        })
        .collect();
    (kept, stats)
}

/// True when `node` equals or contains some anchor (`anchors` document-ordered).
pub(crate) fn covers_an_anchor(node: &DeweyId, anchors: &[DeweyId]) -> bool {
    let p = anchors.partition_point(|a| a < node);
    anchors
        .get(p)
        .is_some_and(|a| node.is_ancestor_or_self_of(a))
}

/// New distinct SLCA results of a single area: its SLCAs minus those equal
/// to or above an anchor.
pub fn area_results(area: &Area<'_>, anchors: &[DeweyId]) -> Vec<DeweyId> {
    compute_slca(&area.lists)
        .into_nodes()
        .into_iter()
        .filter(|v| !covers_an_anchor(v, anchors))
        .collect()
}

/// Outcome of evaluating one intent against an anchor snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnchoredOutcome {
    pub inserted: Vec<DeweyId>,
    pub replaced: Vec<DeweyId>,
    /// The intent's complete SLCA set: new results plus those on or above anchors.
    pub slca: SlcaSet,
    pub stats: EvalStats,
}

/// Combines per-area results (given in area order) with the anchor cover probes.
pub(crate) fn assemble(
    lists: &[&[DeweyId]],
    anchors: &[DeweyId],
    results: Vec<(AreaKind, Vec<DeweyId>)>,
    stats: EvalStats,
) -> AnchoredOutcome {
    let mut inserted = Vec::new();
    let mut replaced = Vec::new();
    for (kind, nodes) in results {
        if let AreaKind::Des(i) = kind {
            if !nodes.is_empty() {
                replaced.push(anchors[i].clone());
            }
        }
        inserted.extend(nodes);
    }
    // areas are disjoint and in document order
    debug_assert!(inserted.windows(2).all(|w| w[0] < w[1]));

    let mut all = inserted.clone();
    if lists.iter().all(|l| !l.is_empty()) {
        all.extend(anchors.iter().filter_map(|a| covering_ancestor(lists, a)));
    }
    AnchoredOutcome {
        inserted,
        replaced,
        slca: SlcaSet::minimal(all),
        stats,
    }
}

/// Evaluates one intent's lists against `anchors` (a document-ordered,
/// ancestor-free snapshot of the distinct set), area by area.
pub fn evaluate_anchored(lists: &[&[DeweyId]], anchors: &[DeweyId]) -> AnchoredOutcome {
    let plan = partition_by_anchors(lists, anchors);
    let (areas, mut stats) = prune_empty_areas(plan.areas);
    stats.nodes_pruned += plan.discarded as u64;
    let mut results = Vec::with_capacity(areas.len());
    for area in &areas {
        stats.nodes_visited += area.node_count() as u64;
        results.push((area.kind, area_results(area, anchors)));
    }
    assemble(lists, anchors, results, stats)
}

/// Top-k diversification that computes only new and more specific results,
/// using the current distinct set as anchors.
pub fn diversify_anchored(
    query_keywords: &[String],
    params: DiversifyParams,
    index: &IndexBundle,
) -> Result<(TopK, EvalStats), QueryError> {
    params.validate()?;
    let matrix = build_matrix(query_keywords, params.m, index)?;
    let intents = IntentGenerator::new(&matrix).take(params.budget.unwrap_or(usize::MAX));
    Ok(run_top_k(
        intents,
        params.k,
        Commit::Apply,
        |_, intent, phi| {
            let segments: Vec<Segment> = intent
                .segments
                .iter()
                .map(|s| resolve_segment(s, index))
                .collect();
            let lists: Vec<&[DeweyId]> = segments.iter().map(|s| s.node_list.as_slice()).collect();
            let anchors = phi.as_slca_set().into_nodes();
            let out = evaluate_anchored(&lists, &anchors);
            IntentEval {
                likelihood: likelihood(&segments),
                slca_count: out.slca.len(),
                inserted: out.inserted,
                replaced: out.replaced,
                stats: out.stats,
            }
        },
    ))
}
