//! Entity-level inverted index and two-term co-occurrence store.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::corpus::{EntityCorpus, IndexConfig, LogBase};
use crate::dewey::{is_strictly_sorted, DeweyId};
use crate::error::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMeta {
    pub id: DeweyId,
    pub label: String,
}

/// The part of [`IndexConfig`] that is persisted with an index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSettings {
    pub entity_labels: BTreeSet<String>,
    pub window: usize,
    pub log_base: LogBase,
}

impl From<&IndexConfig> for IndexSettings {
    fn from(c: &IndexConfig) -> Self {
        IndexSettings {
            entity_labels: c.entity_labels.clone(),
            window: c.window,
            log_base: c.log_base,
        }
    }
}

/// Immutable index over an entity corpus.
///
/// `postings` maps a term to the document-ordered entities containing it.
/// `cooccur` maps a canonical pair `(x, y)` with `x < y` to the number of
/// entities in which the two terms occur within the window of each other.
#[derive(Debug, Clone)]
pub struct IndexBundle {
    entities: Vec<EntityMeta>,
    postings: BTreeMap<String, Vec<DeweyId>>,
    cooccur: BTreeMap<(String, String), u32>,
    settings: IndexSettings,
    partners: HashMap<String, Vec<(String, u32)>>,
}

impl PartialEq for IndexBundle {
    fn eq(&self, other: &Self) -> bool {
        // `partners` is derived from `cooccur`
        self.entities == other.entities
            && self.postings == other.postings
            && self.cooccur == other.cooccur
            && self.settings == other.settings
    }
}

impl Eq for IndexBundle {}

impl IndexBundle {
    /// Assembles a bundle from its parts, checking every structural invariant.
    pub fn from_parts(
        entities: Vec<EntityMeta>,
        postings: BTreeMap<String, Vec<DeweyId>>,
        cooccur: BTreeMap<(String, String), u32>,
        settings: IndexSettings,
    ) -> Result<Self, String> {
        if entities.is_empty() {
            return Err("index has no entities".into());
        }
        if settings.window == 0 {
            return Err("window must be at least 1".into());
        }
        if settings.entity_labels.is_empty() {
            return Err("entity label set is empty".into());
        }
        for (term, list) in &postings {
            if list.is_empty() {
                return Err(format!("empty posting list for {term:?}"));
            }
            if !is_strictly_sorted(list) {
                return Err(format!(
                    "posting list for {term:?} is not in document order"
                ));
            }
        }
        for ((a, b), count) in &cooccur {
            if a >= b {
                return Err(format!("pair ({a:?}, {b:?}) is not canonical"));
            }
            if *count == 0 {
                return Err(format!("pair ({a:?}, {b:?}) has zero count"));
            }
            if !postings.contains_key(a) || !postings.contains_key(b) {
                return Err(format!("pair ({a:?}, {b:?}) references an unknown term"));
            }
        }
        let mut partners: HashMap<String, Vec<(String, u32)>> = HashMap::new();
        for ((a, b), count) in &cooccur {
            partners
                .entry(a.clone())
                .or_default()
                .push((b.clone(), *count));
            partners
                .entry(b.clone())
                .or_default()
                .push((a.clone(), *count));
        }
        for list in partners.values_mut() {
            list.sort();
        }
        Ok(IndexBundle {
            entities,
            postings,
            cooccur,
            settings,
            partners,
        })
    }

    /// `|R(T)|`, the size of the entity sample space.
    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn entities(&self) -> &[EntityMeta] {
        &self.entities
    }

    pub fn settings(&self) -> &IndexSettings {
        &self.settings
    }

    /// Entities containing `term`; empty for unknown terms.
    pub fn postings(&self, term: &str) -> &[DeweyId] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_postings(&self) -> &BTreeMap<String, Vec<DeweyId>> {
        &self.postings
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn cooccurrences(&self) -> &BTreeMap<(String, String), u32> {
        &self.cooccur
    }

    /// Number of entities in which `x` and `y` co-occur within the window. Order-insensitive.
    pub fn cooccur_count(&self, x: &str, y: &str) -> u32 {
        let key = if x < y { (x, y) } else { (y, x) };
        // BTreeMap<(String, String), _> cannot be probed with borrowed tuples
        self.partners
            .get(key.0)
            .and_then(|list| {
                list.binary_search_by(|(t, _)| t.as_str().cmp(key.1))
                    .ok()
                    .map(|i| list[i].1)
            })
            .unwrap_or(0)
    }

    /// Every term co-occurring with `term`, sorted by term, with pair counts.
    pub fn partners(&self, term: &str) -> &[(String, u32)] {
        self.partners.get(term).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Builds postings and co-occurrence counts in one pass over the corpus.
pub fn build_index(
    corpus: &EntityCorpus,
    config: &IndexConfig,
) -> Result<IndexBundle, CorpusError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut postings: BTreeMap<String, Vec<DeweyId>> = BTreeMap::new();
    let mut cooccur: BTreeMap<(String, String), u32> = BTreeMap::new();
    let mut entities = Vec::with_capacity(corpus.len());
    let window = config.window;

    for record in &corpus.entities {
        entities.push(EntityMeta {
            id: record.id.clone(),
            label: record.label.clone(),
        });

        let distinct: BTreeSet<&str> = record.tokens.iter().map(|t| t.term.as_str()).collect();
        for term in distinct {
            postings
                .entry(term.to_string())
                .or_default()
                .push(record.id.clone());
        }

        let mut pairs: HashSet<(&str, &str)> = HashSet::new();
        let tokens = &record.tokens;
        for (i, left) in tokens.iter().enumerate() {
            for right in &tokens[i + 1..] {
                if right.position - left.position > window {
                    break;
                }
                let (a, b) = (left.term.as_str(), right.term.as_str());
                match a.cmp(b) {
                    std::cmp::Ordering::Less => pairs.insert((a, b)),
                    std::cmp::Ordering::Greater => pairs.insert((b, a)),
                    std::cmp::Ordering::Equal => false,
                };
            }
        }
        for (a, b) in pairs {
            *cooccur.entry((a.to_string(), b.to_string())).or_insert(0) += 1;
        }
    }

    // corpus records are in document order, so each posting list already is
    IndexBundle::from_parts(entities, postings, cooccur, IndexSettings::from(config))
        .map_err(CorpusError::Config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    const TOY: &str = "<bib><paper><title>database system query language</title></paper><paper><title>relational database query optimization</title></paper><paper><title>image database retrieval</title></paper></bib>";

    fn toy(window: usize) -> IndexBundle {
        let cfg = IndexConfig::new(["paper"]).with_window(window);
        build_index(&parse_corpus(TOY.as_bytes(), &cfg).unwrap(), &cfg).unwrap()
    }

    fn ids(list: &[DeweyId]) -> Vec<String> {
        list.iter().map(|d| d.to_string()).collect()
    }

    #[test]
    fn toy_postings() {
        let idx = toy(3);
        assert_eq!(idx.entity_count(), 3);
        assert_eq!(idx.term_count(), 8);
        assert_eq!(ids(idx.postings("database")), ["1.1", "1.2", "1.3"]);
        assert_eq!(ids(idx.postings("query")), ["1.1", "1.2"]);
        for (t, e) in [
            ("system", "1.1"),
            ("language", "1.1"),
            ("relational", "1.2"),
            ("optimization", "1.2"),
            ("image", "1.3"),
            ("retrieval", "1.3"),
        ] {
            assert_eq!(ids(idx.postings(t)), [e], "{t}");
        }
        assert!(idx.postings("nothing").is_empty());
    }

    #[test]
    fn toy_window_three() {
        let idx = toy(3);
        assert_eq!(idx.cooccur_count("database", "language"), 1);
        assert_eq!(idx.cooccur_count("language", "database"), 1);
        assert_eq!(idx.cooccur_count("database", "query"), 2);
    }

    #[test]
    fn toy_window_one() {
        let idx = toy(1);
        assert_eq!(idx.cooccur_count("database", "query"), 1);
        assert_eq!(idx.cooccur_count("database", "language"), 0);
        assert!(!idx
            .cooccurrences()
            .contains_key(&("database".to_string(), "language".to_string())));
    }

    #[test]
    fn repeated_pair_in_one_entity_counts_once() {
        let xml = "<r><e>red fish red fish</e></r>";
        let cfg = IndexConfig::new(["e"]);
        let idx = build_index(&parse_corpus(xml.as_bytes(), &cfg).unwrap(), &cfg).unwrap();
        assert_eq!(idx.cooccur_count("fish", "red"), 1);
        assert_eq!(idx.cooccur_count("red", "red"), 0);
    }

    #[test]
    fn from_parts_rejects_broken_invariants() {
        let settings = IndexSettings::from(&IndexConfig::new(["e"]));
        let ent = vec![EntityMeta {
            id: DeweyId::root(),
            label: "e".into(),
        }];
        let mut postings = BTreeMap::new();
        postings.insert("a".to_string(), vec![DeweyId::root()]);
        let mut bad_pair = BTreeMap::new();
        bad_pair.insert(("a".to_string(), "b".to_string()), 1);
        assert!(
            IndexBundle::from_parts(ent.clone(), postings.clone(), bad_pair, settings.clone())
                .is_err()
        );
        let mut unsorted = postings.clone();
        unsorted.insert(
            "b".into(),
            vec!["1.2".parse().unwrap(), "1.1".parse().unwrap()],
        );
        assert!(
            IndexBundle::from_parts(ent.clone(), unsorted, BTreeMap::new(), settings.clone())
                .is_err()
        );
        assert!(IndexBundle::from_parts(ent, postings, BTreeMap::new(), settings).is_ok());
    }
}
