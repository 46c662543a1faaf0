//! Parallel anchor-based evaluation with shared query segments.
//!
//! All intents are generated up front. Segments that occur in two or more
//! intents get an entry in a [`SharedSegmentTable`]; the first intent to need
//! such a segment resolves its node list against the postings and publishes
//! it, later intents read the published list. Within one intent the surviving
//! areas are independent, so they are dealt round-robin to the workers, and
//! per-area results are merged in area order before scoring.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::anchor::{
    area_results, assemble, partition_by_anchors, prune_empty_areas, Area, AreaKind,
};
use crate::dewey::DeweyId;
use crate::diversify::{run_top_k, Commit, DiversifyParams, EvalStats, IntentEval, TopK};
use crate::error::QueryError;
use crate::features::build_matrix;
use crate::index::IndexBundle;
use crate::intent::{generate_intents, intersect_sorted, IntentQuery, Segment, SegmentKey};
use crate::slca::SlcaSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentStatus {
    Pending,
    Processed,
}

#[derive(Debug, Default)]
pub struct SharedEntry {
    uses: usize,
    cached: OnceLock<Arc<Segment>>,
    posting_reads: AtomicU64,
}

impl SharedEntry {
    pub fn uses(&self) -> usize {
        self.uses
    }

    pub fn status(&self) -> SegmentStatus {
        if self.cached.get().is_some() {
            SegmentStatus::Processed
        } else {
            SegmentStatus::Pending
        }
    }

    /// Posting lists read while resolving this segment.
    pub fn posting_reads(&self) -> u64 {
        self.posting_reads.load(Ordering::Relaxed)
    }
}

/// Segments used by more than one intent, with their resolved node lists
/// once the first consumer has computed them.
#[derive(Debug, Default)]
pub struct SharedSegmentTable {
    entries: HashMap<SegmentKey, SharedEntry>,
    /// Posting lists read for segments not in the table.
    unshared_reads: AtomicU64,
}

/// Counts how many intents use each segment and keeps the ones used twice or more.
pub fn plan_shared_segments(intents: &[IntentQuery]) -> SharedSegmentTable {
    let mut counts: HashMap<&SegmentKey, usize> = HashMap::new();
    for intent in intents {
        for key in &intent.segments {
            *counts.entry(key).or_default() += 1;
        }
    }
    let entries = counts
        .into_iter()
        .filter(|&(_, n)| n >= 2)
        .map(|(key, uses)| {
            (
                key.clone(),
                SharedEntry {
                    uses,
                    ..SharedEntry::default()
                },
            )
        })
        .collect();
    SharedSegmentTable {
        entries,
        unshared_reads: AtomicU64::new(0),
    }
}

fn resolve_counted(key: &SegmentKey, index: &IndexBundle, reads: &AtomicU64) -> Segment {
    let kw = index.postings(&key.keyword);
    match &key.feature {
        Some(feature) => {
            let fl = index.postings(feature);
            reads.fetch_add(2, Ordering::Relaxed);
            Segment {
                key: key.clone(),
                node_list: intersect_sorted(kw, fl),
                feature_list_size: fl.len(),
            }
        }
        None => {
            reads.fetch_add(1, Ordering::Relaxed);
            Segment {
                key: key.clone(),
                node_list: kw.to_vec(),
                feature_list_size: kw.len(),
            }
        }
    }
}

impl SharedSegmentTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &SegmentKey) -> Option<&SharedEntry> {
        self.entries.get(key)
    }

    /// Total posting lists read, shared and unshared.
    pub fn posting_reads(&self) -> u64 {
        self.unshared_reads.load(Ordering::Relaxed)
            + self
                .entries
                .values()
                .map(SharedEntry::posting_reads)
                .sum::<u64>()
    }

    /// The segment's node list, from the cache when it has been published.
    /// Concurrent first requests for one key compute it once; the others wait.
    pub fn resolve(&self, key: &SegmentKey, index: &IndexBundle) -> Arc<Segment> {
        match self.entries.get(key) {
            Some(entry) => {
                let mut fresh = false;
                let seg = entry
                    .cached
                    .get_or_init(|| {
                        fresh = true;
                        Arc::new(resolve_counted(key, index, &entry.posting_reads))
                    })
                    .clone();
                if cfg!(debug_assertions) && !fresh {
                    let again = crate::intent::resolve_segment(key, index);
                    debug_assert_eq!(*seg, again, "stale cache for {key}");
                }
                seg
            }
            None => Arc::new(resolve_counted(key, index, &self.unshared_reads)),
        }
    }

    /// Marks one consumer of `key` as done; the entry is dropped after its last use.
    pub fn release(&mut self, key: &SegmentKey) {
        if let Some(entry) = self.entries.get_mut(key) {
            entry.uses -= 1;
            if entry.uses == 0 {
                self.entries.remove(key);
            }
        }
    }
}

/// Surviving areas of one intent and the worker each is assigned to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkPlan<'a> {
    pub areas: Vec<Area<'a>>,
    pub assignment: Vec<usize>,
    pub workers: usize,
}

impl<'a> WorkPlan<'a> {
    /// Deals areas to workers `0..workers` in turn.
    pub fn round_robin(areas: Vec<Area<'a>>, workers: usize) -> Self {
        assert!(workers >= 1, "at least one worker");
        let assignment = (0..areas.len()).map(|i| i % workers).collect();
        WorkPlan {
            areas,
            assignment,
            workers,
        }
    }

    pub fn areas_of(&self, worker: usize) -> impl Iterator<Item = (usize, &Area<'a>)> {
        self.areas
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.assignment[*i] == worker)
    }
}

/// New distinct results of one surviving area.
pub fn evaluate_area(area: &Area<'_>, anchors: &[DeweyId]) -> SlcaSet {
    SlcaSet::from_sorted(area_results(area, anchors)).expect("area results are minimal")
}

/// Runs every area of `plan`, each worker on its own share, and returns the
/// results in area order.
fn execute(plan: &WorkPlan<'_>, anchors: &[DeweyId]) -> Vec<(AreaKind, Vec<DeweyId>)> {
    let per_worker: Vec<Vec<(usize, Vec<DeweyId>)>> = (0..plan.workers)
        .into_par_iter()
        .map(|w| {
            plan.areas_of(w)
                .map(|(i, area)| (i, evaluate_area(area, anchors).into_nodes()))
                .collect()
        })
        .collect();
    let mut slots: Vec<Option<Vec<DeweyId>>> = vec![None; plan.areas.len()];
    for (i, nodes) in per_worker.into_iter().flatten() {
        slots[i] = Some(nodes);
    }
    plan.areas
        .iter()
        .zip(slots)
        .map(|(area, nodes)| (area.kind, nodes.expect("every area assigned")))
        .collect()
}

/// Anchor-based top-k diversification on `workers` threads. The result does
/// not depend on `workers`.
pub fn diversify_parallel(
    query_keywords: &[String],
    params: DiversifyParams,
    index: &IndexBundle,
    workers: usize,
) -> Result<(TopK, EvalStats), QueryError> {
    params.validate()?;
    if workers == 0 {
        return Err(QueryError::InvalidParameter(
            "workers must be at least 1".into(),
        ));
    }
    let matrix = build_matrix(query_keywords, params.m, index)?;
    let intents = generate_intents(&matrix, params.budget);
    let mut table = plan_shared_segments(&intents);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| QueryError::InvalidParameter(format!("worker pool: {e}")))?;

    Ok(run_top_k(
        intents.clone(),
        params.k,
        Commit::Apply,
        |id, intent, phi| {
            let anchors = phi.as_slca_set().into_nodes();
            let ev = pool.install(|| {
                let segments: Vec<Arc<Segment>> = intent
                    .segments
                    .par_iter()
                    .map(|key| table.resolve(key, index))
                    .collect();
                let lists: Vec<&[DeweyId]> =
                    segments.iter().map(|s| s.node_list.as_slice()).collect();
                let plan = partition_by_anchors(&lists, &anchors);
                let (areas, mut stats) = prune_empty_areas(plan.areas);
                stats.nodes_pruned += plan.discarded as u64;
                stats.nodes_visited += areas.iter().map(|a| a.node_count() as u64).sum::<u64>();
                let work = WorkPlan::round_robin(areas, workers);
                let results = execute(&work, &anchors);
                let out = assemble(&lists, &anchors, results, stats);
                IntentEval {
                    likelihood: segments.iter().map(|s| s.likelihood()).product(),
                    slca_count: out.slca.len(),
                    inserted: out.inserted,
                    replaced: out.replaced,
                    stats: out.stats,
                }
            });
            for key in &intents[id].segments {
                table.release(key);
            }
            ev
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchor::diversify_anchored;
    use crate::corpus::{parse_corpus, IndexConfig};
    use crate::diversify::diversify_baseline;
    use crate::index::build_index;
    use std::borrow::Cow;

    const TOY: &str = "<bib><paper><title>database system query language</title></paper><paper><title>relational database query optimization</title></paper><paper><title>image database retrieval</title></paper></bib>";

    fn toy() -> IndexBundle {
        let cfg = IndexConfig::new(["paper"]);
        build_index(&parse_corpus(TOY.as_bytes(), &cfg).unwrap(), &cfg).unwrap()
    }

    fn key(k: &str, f: &str) -> SegmentKey {
        SegmentKey {
            keyword: k.into(),
            feature: Some(f.into()),
        }
    }

    fn intent(pairs: &[(&str, &str)]) -> IntentQuery {
        IntentQuery {
            segments: pairs.iter().map(|(k, f)| key(k, f)).collect(),
            agg_mi: 0.0,
        }
    }

    fn list(items: &[&str]) -> Vec<DeweyId> {
        items.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn shared_segments_are_counted() {
        let t = plan_shared_segments(&[
            intent(&[("a", "f1"), ("b", "g1")]),
            intent(&[("a", "f1"), ("b", "g2")]),
        ]);
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(&key("a", "f1")).unwrap().uses(), 2);
        let t = plan_shared_segments(&[intent(&[("a", "f1")]), intent(&[("a", "f2")])]);
        assert!(t.is_empty());
    }

    #[test]
    fn release_evicts_after_last_use() {
        let mut t = plan_shared_segments(&[intent(&[("a", "f1")]), intent(&[("a", "f1")])]);
        t.release(&key("a", "f1"));
        assert_eq!(t.get(&key("a", "f1")).unwrap().uses(), 1);
        t.release(&key("a", "f1"));
        assert!(t.get(&key("a", "f1")).is_none());
    }

    #[test]
    fn cache_hit_reads_no_postings() {
        let idx = toy();
        let k = key("query", "relational");
        let t = plan_shared_segments(&[
            intent(&[("query", "relational")]),
            intent(&[("query", "relational")]),
        ]);
        assert_eq!(t.get(&k).unwrap().status(), SegmentStatus::Pending);
        let first = t.resolve(&k, &idx);
        assert_eq!(t.get(&k).unwrap().status(), SegmentStatus::Processed);
        let before = t.get(&k).unwrap().posting_reads();
        assert_eq!(before, 2);
        let second = t.resolve(&k, &idx);
        assert_eq!(t.get(&k).unwrap().posting_reads(), before);
        assert_eq!(first, second);
        assert_eq!(first.node_list, list(&["1.2"]));
    }

    #[test]
    fn single_area_and_cross_area() {
        let a = list(&["1.1"]);
        let area = Area {
            kind: AreaKind::Next,
            lists: vec![Cow::Borrowed(a.as_slice()), Cow::Borrowed(a.as_slice())],
        };
        assert_eq!(evaluate_area(&area, &[]).nodes(), a.as_slice());

        let b = list(&["1.3"]);
        let area = Area {
            kind: AreaKind::Pre(0),
            lists: vec![Cow::Borrowed(a.as_slice()), Cow::Borrowed(b.as_slice())],
        };
        assert!(evaluate_area(&area, &list(&["1.2"])).is_empty());
    }

    #[test]
    fn round_robin_assignment() {
        let areas: Vec<Area> = (0..5)
            .map(|i| Area {
                kind: AreaKind::Pre(i),
                lists: vec![],
            })
            .collect();
        let plan = WorkPlan::round_robin(areas, 2);
        assert_eq!(plan.assignment, [0, 1, 0, 1, 0]);
        assert_eq!(plan.areas_of(1).count(), 2);
    }

    #[test]
    fn toy_all_engines_agree() {
        let idx = toy();
        let q: Vec<String> = vec!["database".into(), "query".into()];
        for (k, m) in [(1, 2), (2, 2), (2, 3), (3, 4)] {
            let p = DiversifyParams::new(k, m);
            let base = diversify_baseline(&q, p, &idx).unwrap().0;
            let (anch, astats) = diversify_anchored(&q, p, &idx).unwrap();
            assert_eq!(base, anch);
            for workers in [1, 2, 6, 16] {
                let (par, pstats) = diversify_parallel(&q, p, &idx, workers).unwrap();
                assert_eq!(base, par, "workers={workers}");
                assert_eq!(astats, pstats);
            }
        }
    }

    #[test]
    fn zero_workers_rejected() {
        let idx = toy();
        let q: Vec<String> = vec!["query".into()];
        assert!(diversify_parallel(&q, DiversifyParams::new(1, 2), &idx, 0).is_err());
    }
}
