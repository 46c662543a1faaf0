//! Diversified keyword search over XML corpora.
//!
//! A corpus is parsed into entity records identified by Dewey IDs, indexed
//! into postings and window co-occurrence counts, and queried by expanding
//! each keyword with mutual-information features. Every resulting intent is
//! evaluated under SLCA semantics and the top-k intents are chosen by
//! relevance times novelty against the results already selected.

pub mod anchor;
pub mod corpus;
pub mod dewey;
pub mod diversify;
pub mod error;
pub mod features;
pub mod index;
pub mod intent;
pub mod parallel;
pub mod report;
pub mod slca;
pub mod store;
pub mod text;

pub use anchor::{
    diversify_anchored, evaluate_anchored, partition_by_anchor, partition_by_anchors,
};
pub use corpus::{parse_corpus, EntityCorpus, IndexConfig};
pub use dewey::DeweyId;
pub use diversify::{diversify_baseline, DiversifyParams, EvalStats, ScoredIntent, TopK};
pub use error::{CorpusError, DeweyParseError, QueryError, StoreError};
pub use features::{build_matrix, mutual_information, top_features, FeatureEntry, FeatureMatrix};
pub use index::{build_index, IndexBundle};
pub use intent::{generate_intents, IntentGenerator, IntentQuery, SegmentKey};
pub use parallel::{diversify_parallel, plan_shared_segments, SharedSegmentTable, WorkPlan};
pub use slca::{compute_slca, merge_distinct, DiversifiedSet, SlcaSet};
pub use store::{load_index, save_index};
