//! Intent queries: one (keyword, feature) segment per query keyword,
//! enumerated from the feature matrix by descending aggregated MI.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use crate::dewey::DeweyId;
use crate::features::FeatureMatrix;
use crate::index::IndexBundle;

/// A query keyword bound to a context term. `feature` is `None` when the
/// keyword has no mined features and stands alone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegmentKey {
    pub keyword: String,
    pub feature: Option<String>,
}

impl fmt::Display for SegmentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.feature {
            Some(feat) => write!(f, "{}+{}", self.keyword, feat),
            None => f.write_str(&self.keyword),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntentQuery {
    /// One per original keyword, in query order.
    pub segments: Vec<SegmentKey>,
    /// Sum of the chosen features' MI scores.
    pub agg_mi: f64,
}

impl IntentQuery {
    /// Column-wise comparison of feature names, the tie-break after aggregated MI.
    pub fn lexical_cmp(&self, other: &IntentQuery) -> Ordering {
        self.segments
            .iter()
            .map(|s| &s.feature)
            .cmp(other.segments.iter().map(|s| &s.feature))
            .then_with(|| self.segments.cmp(&other.segments))
    }
}

impl fmt::Display for IntentQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// A segment with its entity list resolved against the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub key: SegmentKey,
    /// Entities containing both the keyword and the feature.
    pub node_list: Vec<DeweyId>,
    /// `|postings(feature)|`; for a bare keyword, `|postings(keyword)|`.
    pub feature_list_size: usize,
}

impl Segment {
    /// `|R(s_i)| / |R(f_i)|`; a bare keyword contributes 1.
    pub fn likelihood(&self) -> f64 {
        match self.key.feature {
            None => 1.0,
            Some(_) if self.feature_list_size == 0 => 0.0,
            Some(_) => self.node_list.len() as f64 / self.feature_list_size as f64,
        }
    }
}

/// Document-ordered intersection of two sorted lists.
pub fn intersect_sorted(a: &[DeweyId], b: &[DeweyId]) -> Vec<DeweyId> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut out = Vec::with_capacity(small.len());
    let mut lo = 0;
    for x in small {
        // gallop-free binary search over the shrinking tail of the larger list
        let rest = &large[lo..];
        let p = rest.partition_point(|y| y < x);
        lo += p;
        if lo < large.len() && &large[lo] == x {
            out.push(x.clone());
            lo += 1;
        }
        if lo >= large.len() {
            break;
        }
    }
    out
}

/// Entities containing both `keyword` and `feature`.
pub fn segment_node_list(keyword: &str, feature: &str, index: &IndexBundle) -> Vec<DeweyId> {
    intersect_sorted(index.postings(keyword), index.postings(feature))
}

pub fn resolve_segment(key: &SegmentKey, index: &IndexBundle) -> Segment {
    match &key.feature {
        Some(feature) => Segment {
            key: key.clone(),
            node_list: segment_node_list(&key.keyword, feature, index),
            feature_list_size: index.postings(feature).len(),
        },
        None => {
            let list = index.postings(&key.keyword).to_vec();
            Segment {
                key: key.clone(),
                feature_list_size: list.len(),
                node_list: list,
            }
        }
    }
}

struct Candidate {
    agg_mi: f64,
    features: Vec<Option<String>>,
    picks: Vec<usize>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // max-heap: larger MI first, then lexicographically smaller features first
    fn cmp(&self, other: &Self) -> Ordering {
        self.agg_mi
            .total_cmp(&other.agg_mi)
            .then_with(|| other.features.cmp(&self.features))
            .then_with(|| other.picks.cmp(&self.picks))
    }
}

/// Lazily emits every feature combination exactly once, by non-increasing
/// aggregated MI and then column-wise feature name.
///
/// Each column is sorted by (MI desc, name asc), so bumping one pick never
/// yields a combination that ranks earlier; a best-first frontier over pick
/// vectors therefore produces the exact order.
pub struct IntentGenerator<'a> {
    matrix: &'a FeatureMatrix,
    heap: BinaryHeap<Candidate>,
    seen: HashSet<Vec<usize>>,
}

impl<'a> IntentGenerator<'a> {
    pub fn new(matrix: &'a FeatureMatrix) -> Self {
        let mut generator = IntentGenerator {
            matrix,
            heap: BinaryHeap::new(),
            seen: HashSet::new(),
        };
        if matrix.width() > 0 {
            generator.push(vec![0; matrix.width()]);
        }
        generator
    }

    fn push(&mut self, picks: Vec<usize>) {
        if !self.seen.insert(picks.clone()) {
            return;
        }
        let mut agg_mi = 0.0;
        let mut features = Vec::with_capacity(picks.len());
        for (col, &p) in self.matrix.columns.iter().zip(&picks) {
            match col.get(p) {
                Some(entry) => {
                    agg_mi += entry.mi;
                    features.push(Some(entry.feature.clone()));
                }
                None => features.push(None),
            }
        }
        self.heap.push(Candidate {
            agg_mi,
            features,
            picks,
        });
    }
}

impl Iterator for IntentGenerator<'_> {
    type Item = IntentQuery;

    fn next(&mut self) -> Option<IntentQuery> {
        let top = self.heap.pop()?;
        for i in 0..top.picks.len() {
            if top.picks[i] + 1 < self.matrix.columns[i].len() {
                let mut next = top.picks.clone();
                next[i] += 1;
                self.push(next);
            }
        }
        let segments = self
            .matrix
            .keywords
            .iter()
            .zip(top.features)
            .map(|(k, feature)| SegmentKey {
                keyword: k.clone(),
                feature,
            })
            .collect();
        Some(IntentQuery {
            segments,
            agg_mi: top.agg_mi,
        })
    }
}

/// The first `budget` intents (all of them when `budget` is `None`).
pub fn generate_intents(matrix: &FeatureMatrix, budget: Option<usize>) -> Vec<IntentQuery> {
    let gen = IntentGenerator::new(matrix);
    match budget {
        Some(b) => gen.take(b).collect(),
        None => gen.collect(),
    }
}
