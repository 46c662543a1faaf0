//! Intent scoring (relevance x novelty) and the top-k driver shared by all
//! evaluation strategies, plus the baseline strategy itself.
//!
//! For an intent with segments `s_i = (k_i, f_i)`:
//!
//! ```text
//! likelihood = prod_i |R(s_i)| / |R(f_i)|
//! relevance  = likelihood * |SLCA(R(s_1), ..., R(s_n))|
//! dif        = distinct / |union|      (1 while the distinct set is empty)
//! score      = relevance * dif
//! ```
//!
//! The constant factors `gamma` and `1/|R(T)|` are omitted; they do not change
//! the ranking of intents for one query.

use std::cmp::Ordering;
use std::ops::AddAssign;

use serde::Serialize;

use crate::dewey::DeweyId;
use crate::error::QueryError;
use crate::features::build_matrix;
use crate::index::IndexBundle;
use crate::intent::{resolve_segment, IntentGenerator, IntentQuery, Segment};
use crate::slca::{compute_slca, merge_distinct, DiversifiedSet, IntentId, SlcaSet};

/// Per-run work counters. Per intent, visited + pruned equals the total
/// number of nodes in its segment lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalStats {
    /// Nodes handed to SLCA computation.
    pub nodes_visited: u64,
    /// Nodes discarded as anchor ancestors or in pruned areas.
    pub nodes_pruned: u64,
    /// Areas dropped because some segment had no node in them.
    pub areas_skipped: u64,
}

impl AddAssign for EvalStats {
    fn add_assign(&mut self, rhs: Self) {
        self.nodes_visited += rhs.nodes_visited;
        self.nodes_pruned += rhs.nodes_pruned;
        self.areas_skipped += rhs.areas_skipped;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiversifyParams {
    pub k: usize,
    pub m: usize,
    /// Maximum number of intents evaluated; `None` evaluates every combination.
    pub budget: Option<usize>,
}

impl DiversifyParams {
    pub fn new(k: usize, m: usize) -> Self {
        DiversifyParams { k, m, budget: None }
    }

    pub fn with_budget(mut self, budget: Option<usize>) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if self.k == 0 {
            return Err(QueryError::InvalidParameter("k must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(QueryError::InvalidParameter("m must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relevance {
    pub likelihood: f64,
    pub slca: SlcaSet,
    pub relevance: f64,
}

pub fn likelihood(segments: &[Segment]) -> f64 {
    segments.iter().map(Segment::likelihood).product()
}

/// Likelihood, SLCA results and relevance of one intent.
pub fn relevance_prob(intent: &IntentQuery, index: &IndexBundle) -> Relevance {
    let segments: Vec<Segment> = intent
        .segments
        .iter()
        .map(|k| resolve_segment(k, index))
        .collect();
    let lists: Vec<&[DeweyId]> = segments.iter().map(|s| s.node_list.as_slice()).collect();
    let slca = compute_slca(&lists);
    let likelihood = likelihood(&segments);
    Relevance {
        likelihood,
        relevance: likelihood * slca.len() as f64,
        slca,
    }
}

fn novelty(slca_count: usize, distinct: usize, union_size: usize, phi_empty: bool) -> f64 {
    if slca_count == 0 {
        0.0
    } else if phi_empty {
        1.0
    } else {
        distinct as f64 / union_size as f64
    }
}

/// Share of `fresh` that is new or more specific than the current distinct set.
pub fn dif(fresh: &SlcaSet, phi: &DiversifiedSet) -> f64 {
    let p = phi.preview(fresh);
    novelty(
        fresh.len(),
        p.distinct_count(),
        p.union_size,
        phi.is_empty(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredIntent {
    pub id: IntentId,
    pub intent: IntentQuery,
    pub likelihood: f64,
    pub relevance: f64,
    pub dif: f64,
    pub score: f64,
    /// The intent's distinct contribution at the time it was scored.
    pub results: SlcaSet,
}

/// Ranking of top-k entries: score desc, aggregated MI desc, features asc.
pub fn entry_order(a: &ScoredIntent, b: &ScoredIntent) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| b.intent.agg_mi.total_cmp(&a.intent.agg_mi))
        .then_with(|| a.intent.lexical_cmp(&b.intent))
        .then_with(|| a.id.cmp(&b.id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopK {
    pub k: usize,
    pub entries: Vec<ScoredIntent>,
    pub phi: DiversifiedSet,
}

impl TopK {
    pub fn empty(k: usize) -> Self {
        TopK {
            k,
            entries: Vec::new(),
            phi: DiversifiedSet::new(),
        }
    }
}

/// What a strategy reports for one intent, evaluated against the distinct
/// set as it stood before the intent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntentEval {
    pub likelihood: f64,
    /// Size of the intent's full SLCA set.
    pub slca_count: usize,
    /// SLCA nodes not equal to or above any current member.
    pub inserted: Vec<DeweyId>,
    /// Current members lying above an inserted node.
    pub replaced: Vec<DeweyId>,
    pub stats: EvalStats,
}

/// How an admitted intent's results enter the distinct set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Commit {
    /// Re-compare against the set with `merge_distinct`.
    Merge,
    /// Apply the strategy's precomputed insertions and replacements.
    Apply,
}

/// Scores intents in enumeration order and keeps the best `k`.
///
/// An intent is admitted while fewer than `k` are held, or when it beats
/// the weakest holder, which is then evicted together with its results.
/// Intents scoring 0 are never admitted.
pub(crate) fn run_top_k<I, F>(
    intents: I,
    k: usize,
    commit: Commit,
    mut evaluate: F,
) -> (TopK, EvalStats)
where
    I: IntoIterator<Item = IntentQuery>,
    F: FnMut(IntentId, &IntentQuery, &DiversifiedSet) -> IntentEval,
{
    let mut top = TopK::empty(k);
    let mut stats = EvalStats::default();
    for (id, intent) in intents.into_iter().enumerate() {
        let ev = evaluate(id, &intent, &top.phi);
        stats += ev.stats;
        let phi_empty = top.phi.is_empty();
        let union_size = top.phi.len() - ev.replaced.len() + ev.inserted.len();
        let relevance = ev.likelihood * ev.slca_count as f64;
        let dif = novelty(ev.slca_count, ev.inserted.len(), union_size, phi_empty);
        let score = if phi_empty {
            relevance
        } else {
            relevance * dif
        };
        if score <= 0.0 {
            continue;
        }
        if top.entries.len() >= k {
            let weakest = top.entries.last().expect("k >= 1");
            if score <= weakest.score {
                continue;
            }
            let evicted = top.entries.pop().expect("non-empty");
            top.phi.remove_intent(evicted.id);
        }
        let results = SlcaSet::from_sorted(ev.inserted).expect("inserted nodes form an SLCA set");
        match commit {
            Commit::Merge => {
                merge_distinct(&mut top.phi, &results, id);
            }
            Commit::Apply => top.phi.apply(results.nodes(), &ev.replaced, id),
        }
        let scored = ScoredIntent {
            id,
            intent,
            likelihood: ev.likelihood,
            relevance,
            dif,
            score,
            results,
        };
        let pos = top
            .entries
            .partition_point(|e| entry_order(e, &scored) == Ordering::Less);
        top.entries.insert(pos, scored);
    }
    (top, stats)
}

/// Evaluates every intent in full and compares its SLCA set with the
/// distinct set node by node.
pub fn diversify_baseline(
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
        Commit::Merge,
        |_, intent, phi| {
            let segments: Vec<Segment> = intent
                .segments
                .iter()
                .map(|s| resolve_segment(s, index))
                .collect();
            let lists: Vec<&[DeweyId]> = segments.iter().map(|s| s.node_list.as_slice()).collect();
            let total: usize = lists.iter().map(|l| l.len()).sum();
            let slca = compute_slca(&lists);
            let preview = phi.preview(&slca);
            IntentEval {
                likelihood: likelihood(&segments),
                slca_count: slca.len(),
                inserted: preview.inserted,
                replaced: preview.replaced,
                stats: EvalStats {
                    nodes_visited: total as u64,
                    ..EvalStats::default()
                },
            }
        },
    ))
}
