//! Mutual-information feature terms and the per-query feature matrix.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::QueryError;
use crate::index::IndexBundle;

/// A context term for a query keyword with its mutual-information score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureEntry {
    pub keyword: String,
    pub feature: String,
    pub mi: f64,
}

/// `MI(x, y) = P(x,y) * ln(P(x,y) / (P(x) * P(y)))` over the entity sample space.
///
/// Pairs that never co-occur within the window score 0, as do unknown terms
/// and `x == y`.
pub fn mutual_information(x: &str, y: &str, index: &IndexBundle) -> f64 {
    if x == y {
        return 0.0;
    }
    let count = index.cooccur_count(x, y);
    if count == 0 {
        return 0.0;
    }
    let n = index.entity_count() as f64;
    let p_xy = count as f64 / n;
    let p_x = index.postings(x).len() as f64 / n;
    let p_y = index.postings(y).len() as f64 / n;
    p_xy * (p_xy / (p_x * p_y)).ln()
}

/// Ranking used everywhere features are ordered: MI descending, then feature name.
pub(crate) fn feature_order(a: &FeatureEntry, b: &FeatureEntry) -> Ordering {
    b.mi.total_cmp(&a.mi)
        .then_with(|| a.feature.cmp(&b.feature))
}

/// The `m` best positively-scored partners of `keyword`.
pub fn top_features(keyword: &str, m: usize, index: &IndexBundle) -> Vec<FeatureEntry> {
    let mut entries: Vec<FeatureEntry> = index
        .partners(keyword)
        .iter()
        .filter_map(|(partner, _)| {
            let mi = mutual_information(keyword, partner, index);
            (mi > 0.0).then(|| FeatureEntry {
                keyword: keyword.to_string(),
                feature: partner.clone(),
                mi,
            })
        })
        .collect();
    entries.sort_by(feature_order);
    entries.truncate(m);
    entries
}

/// One column of ranked features per query keyword, in query order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub keywords: Vec<String>,
    pub columns: Vec<Vec<FeatureEntry>>,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.keywords.len()
    }

    /// Number of intent combinations; an empty column contributes a single
    /// bare-keyword choice.
    pub fn combinations(&self) -> usize {
        self.columns
            .iter()
            .map(|c| c.len().max(1))
            .fold(1usize, usize::saturating_mul)
    }
}

pub fn build_matrix(
    query_keywords: &[String],
    m: usize,
    index: &IndexBundle,
) -> Result<FeatureMatrix, QueryError> {
    if query_keywords.is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    if m == 0 {
        return Err(QueryError::InvalidParameter("m must be at least 1".into()));
    }
    let columns: Vec<Vec<FeatureEntry>> = query_keywords
        .iter()
        .map(|k| top_features(k, m, index))
        .collect();
    if columns.iter().all(Vec::is_empty) {
        return Err(QueryError::NoIntent);
    }
    Ok(FeatureMatrix {
        keywords: query_keywords.to_vec(),
        columns,
    })
}
