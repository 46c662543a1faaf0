//! Seeded generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use xmldiv::corpus::{parse_corpus, IndexConfig};
use xmldiv::dewey::DeweyId;
use xmldiv::features::build_matrix;
use xmldiv::index::{build_index, IndexBundle};
use xmldiv::intent::{generate_intents, IntentQuery};
use xmldiv::text::default_stopwords;

pub const TOY: &str = include_str!("../fixtures/toy.xml");
pub const ENTITY: &str = "item";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn d(s: &str) -> DeweyId {
    s.parse().unwrap()
}

pub fn toy_index() -> IndexBundle {
    let cfg = IndexConfig::new(["paper"]);
    build_index(&parse_corpus(TOY.as_bytes(), &cfg).unwrap(), &cfg).unwrap()
}

// ---------------------------------------------------------------- trees

/// Dewey IDs of a random tree with `1..=max_nodes` nodes, in document order.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> Vec<DeweyId> {
    let n = rng.gen_range(1..=max_nodes);
    let mut nodes = vec![DeweyId::root()];
    let mut children = vec![0u32];
    for _ in 1..n {
        // bias towards recent nodes for some depth
        let p = if rng.gen_bool(0.5) {
            rng.gen_range(nodes.len().saturating_sub(4)..nodes.len())
        } else {
            rng.gen_range(0..nodes.len())
        };
        children[p] += 1;
        let child = nodes[p].child(children[p]);
        nodes.push(child);
        children.push(0);
    }
    nodes.sort();
    nodes
}

/// `count` random document-ordered subsets of `tree`; occasionally empty.
pub fn random_lists(rng: &mut ChaCha8Rng, tree: &[DeweyId], count: usize) -> Vec<Vec<DeweyId>> {
    (0..count)
        .map(|_| {
            let density = rng.gen_range(0.0..0.35);
            tree.iter()
                .filter(|_| rng.gen_bool(density))
                .cloned()
                .collect()
        })
        .collect()
}

/// Nodes whose subtree holds a member of every list and that have no
/// descendant with the same property, found by checking every tree node.
pub fn brute_slca(tree: &[DeweyId], lists: &[Vec<DeweyId>]) -> Vec<DeweyId> {
    if lists.is_empty() {
        return Vec::new();
    }
    let covers = |v: &DeweyId| {
        lists
            .iter()
            .all(|l| l.iter().any(|x| v.is_ancestor_or_self_of(x)))
    };
    let covering: Vec<&DeweyId> = tree.iter().filter(|v| covers(v)).collect();
    let mut out: Vec<DeweyId> = covering
        .iter()
        .filter(|v| !covering.iter().any(|u| v.is_ancestor_of(u)))
        .map(|v| (*v).clone())
        .collect();
    out.sort();
    out
}

/// Same as [`brute_slca`] with candidates taken from all prefixes of list members.
pub fn brute_slca_lists(lists: &[Vec<DeweyId>]) -> Vec<DeweyId> {
    let mut cands = BTreeSet::new();
    for l in lists {
        for x in l {
            for depth in 1..=x.depth() {
                cands.insert(x.prefix(depth));
            }
        }
    }
    let cands: Vec<DeweyId> = cands.into_iter().collect();
    brute_slca(&cands, lists)
}

// ---------------------------------------------------------------- corpora

#[derive(Debug, Clone)]
pub enum Content {
    Text(Vec<String>),
    Child(Elem),
}

#[derive(Debug, Clone)]
pub struct Elem {
    pub label: &'static str,
    pub content: Vec<Content>,
}

pub fn vocab(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

fn random_words(rng: &mut ChaCha8Rng, vocab: &[String], len: usize) -> Vec<String> {
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.05) {
                "the".to_string()
            } else {
                vocab[rng.gen_range(0..vocab.len())].clone()
            }
        })
        .collect()
}

fn grow(rng: &mut ChaCha8Rng, vocab: &[String], budget: &mut usize, depth: usize) -> Elem {
    let label = match rng.gen_range(0..10) {
        0..=5 => ENTITY,
        6..=8 => "sec",
        _ => "note",
    };
    let mut content = Vec::new();
    if rng.gen_bool(0.8) {
        let len = rng.gen_range(1..6);
        content.push(Content::Text(random_words(rng, vocab, len)));
    }
    let kids = if depth >= 5 { 0 } else { rng.gen_range(0..4) };
    for _ in 0..kids {
        if *budget == 0 {
            break;
        }
        *budget -= 1;
        content.push(Content::Child(grow(rng, vocab, budget, depth + 1)));
        if rng.gen_bool(0.3) {
            let len = rng.gen_range(1..4);
            content.push(Content::Text(random_words(rng, vocab, len)));
        }
    }
    Elem { label, content }
}

/// A random document of at most `max_nodes` elements drawn from a
/// vocabulary of `vocab_size` words; it always holds at least one entity.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_nodes: usize, vocab_size: usize) -> Elem {
    let words = vocab(vocab_size);
    let mut budget = rng.gen_range(2..=max_nodes) - 2;
    let len = rng.gen_range(1..6);
    let first = Elem {
        label: ENTITY,
        content: vec![Content::Text(random_words(rng, &words, len))],
    };
    let mut content = vec![Content::Child(first)];
    while budget > 0 {
        budget -= 1;
        content.push(Content::Child(grow(rng, &words, &mut budget, 1)));
    }
    Elem {
        label: "root",
        content,
    }
}

pub fn to_xml(e: &Elem) -> String {
    fn walk(e: &Elem, out: &mut String) {
        out.push('<');
        out.push_str(e.label);
        out.push('>');
        for c in &e.content {
            match c {
                Content::Text(words) => {
                    out.push(' ');
                    out.push_str(&words.join(" "));
                    out.push(' ');
                }
                Content::Child(child) => walk(child, out),
            }
        }
        out.push_str("</");
        out.push_str(e.label);
        out.push('>');
    }
    let mut s = String::new();
    walk(e, &mut s);
    s
}

/// An entity as derived directly from the generator's model: every word of
/// its subtree in document order, stop words dropped but still counted.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntity {
    pub id: DeweyId,
    pub tokens: Vec<(String, usize)>,
}

pub fn oracle_entities(root: &Elem, label: &str) -> Vec<OracleEntity> {
    fn words(e: &Elem, out: &mut Vec<String>) {
        for c in &e.content {
            match c {
                Content::Text(w) => out.extend(w.iter().cloned()),
                Content::Child(ch) => words(ch, out),
            }
        }
    }
    fn walk(
        e: &Elem,
        id: DeweyId,
        label: &str,
        stop: &BTreeSet<String>,
        out: &mut Vec<OracleEntity>,
    ) {
        if e.label == label {
            let mut all = Vec::new();
            words(e, &mut all);
            let tokens = all
                .into_iter()
                .enumerate()
                .filter(|(_, w)| !stop.contains(w))
                .map(|(i, w)| (w, i))
                .collect();
            out.push(OracleEntity {
                id: id.clone(),
                tokens,
            });
        }
        let mut ord = 0;
        for c in &e.content {
            if let Content::Child(ch) = c {
                ord += 1;
                walk(ch, id.child(ord), label, stop, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(root, DeweyId::root(), label, &default_stopwords(), &mut out);
    out
}

pub fn oracle_postings(entities: &[OracleEntity]) -> BTreeMap<String, Vec<DeweyId>> {
    let mut map: BTreeMap<String, Vec<DeweyId>> = BTreeMap::new();
    for e in entities {
        let terms: BTreeSet<&String> = e.tokens.iter().map(|t| &t.0).collect();
        for t in terms {
            map.entry(t.clone()).or_default().push(e.id.clone());
        }
    }
    map
}

fn pair_within(e: &OracleEntity, x: &str, y: &str, window: usize) -> bool {
    e.tokens.iter().any(|(a, pa)| {
        a == x
            && e.tokens
                .iter()
                .any(|(b, pb)| b == y && pa != pb && pa.abs_diff(*pb) <= window)
    })
}

pub fn oracle_cooccur(entities: &[OracleEntity], window: usize) -> BTreeMap<(String, String), u32> {
    let mut map = BTreeMap::new();
    for e in entities {
        let terms: BTreeSet<&String> = e.tokens.iter().map(|t| &t.0).collect();
        for &x in &terms {
            for &y in &terms {
                if x < y && pair_within(e, x, y, window) {
                    *map.entry((x.clone(), y.clone())).or_insert(0) += 1;
                }
            }
        }
    }
    map
}

/// Mutual information recomputed by scanning every entity.
pub fn oracle_mi(entities: &[OracleEntity], x: &str, y: &str, window: usize) -> f64 {
    if x == y {
        return 0.0;
    }
    let n = entities.len() as f64;
    let has = |e: &OracleEntity, t: &str| e.tokens.iter().any(|(w, _)| w == t);
    let nx = entities.iter().filter(|e| has(e, x)).count() as f64;
    let ny = entities.iter().filter(|e| has(e, y)).count() as f64;
    let nxy = entities
        .iter()
        .filter(|e| pair_within(e, x, y, window))
        .count() as f64;
    if nxy == 0.0 {
        return 0.0;
    }
    let (pxy, px, py) = (nxy / n, nx / n, ny / n);
    pxy * (pxy / (px * py)).ln()
}

pub fn index_corpus(root: &Elem, window: usize) -> IndexBundle {
    let cfg = IndexConfig::new([ENTITY]).with_window(window);
    let corpus = parse_corpus(to_xml(root).as_bytes(), &cfg).unwrap();
    build_index(&corpus, &cfg).unwrap()
}

/// 2 or 3 distinct query words, biased towards words present in the index.
pub fn random_query(rng: &mut ChaCha8Rng, index: &IndexBundle, vocab_size: usize) -> Vec<String> {
    let known: Vec<&String> = index.all_postings().keys().collect();
    let n = rng.gen_range(2..=3);
    let mut q: Vec<String> = Vec::new();
    while q.len() < n {
        let w = if rng.gen_bool(0.9) && !known.is_empty() {
            known[rng.gen_range(0..known.len())].clone()
        } else {
            format!("w{}", rng.gen_range(0..vocab_size + 5))
        };
        if !q.contains(&w) {
            q.push(w);
        }
    }
    q
}

pub const TOPICS: usize = 20;
const TOPIC_STRIDE: usize = 30;
const TOPIC_WORDS: usize = 40;

/// The `rank`-th most frequent word of `topic`. Neighbouring topics share
/// ten words, which makes those words ambiguous.
pub fn topic_word(topic: usize, rank: usize) -> String {
    format!("t{}", topic * TOPIC_STRIDE + rank)
}

/// A skewed corpus of `sections * per_section` entities. Each section leans
/// to one topic; word frequencies inside a topic and the topic popularity
/// both follow a Zipf-like law, and a few global filler words add noise.
pub fn skewed_corpus(rng: &mut ChaCha8Rng, sections: usize, per_section: usize) -> String {
    let zipf = |n: usize, s: f64| {
        WeightedIndex::new((0..n).map(|r| 1.0 / ((r + 1) as f64).powf(s))).unwrap()
    };
    let topic_dist = zipf(TOPICS, 0.8);
    let word_dist = zipf(TOPIC_WORDS, 1.0);
    let filler_dist = zipf(50, 1.2);
    let mut xml = String::from("<root>");
    for _ in 0..sections {
        let lean = topic_dist.sample(rng);
        xml.push_str("<sec>");
        for _ in 0..per_section {
            let topic = if rng.gen_bool(0.7) {
                lean
            } else {
                topic_dist.sample(rng)
            };
            let len = rng.gen_range(4..9);
            let mut title: Vec<String> = (0..len)
                .map(|_| topic_word(topic, word_dist.sample(rng)))
                .collect();
            let at = rng.gen_range(0..=title.len());
            title.insert(at, format!("g{}", filler_dist.sample(rng)));
            xml.push_str("<item><title>");
            xml.push_str(&title.join(" "));
            xml.push_str("</title></item>");
        }
        xml.push_str("</sec>");
    }
    xml.push_str("</root>");
    xml
}

// ---------------------------------------------------------------- reference diversifier

#[derive(Debug, Clone)]
pub struct RefEntry {
    pub id: usize,
    pub intent: IntentQuery,
    pub score: f64,
    pub dif: f64,
    pub relevance: f64,
    pub results: Vec<DeweyId>,
}

#[derive(Debug, Clone)]
pub struct RefOutcome {
    pub entries: Vec<RefEntry>,
    pub phi: Vec<(DeweyId, usize)>,
}

fn ref_order(a: &RefEntry, b: &RefEntry) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| b.intent.agg_mi.total_cmp(&a.intent.agg_mi))
        .then_with(|| a.intent.lexical_cmp(&b.intent))
        .then_with(|| a.id.cmp(&b.id))
}

/// A deliberately naive top-k diversifier: linear-scan intersections,
/// brute-force SLCA and set-based bookkeeping of the distinct results.
pub fn reference_diversify(
    index: &IndexBundle,
    query: &[String],
    k: usize,
    m: usize,
) -> Option<RefOutcome> {
    let matrix = build_matrix(query, m, index).ok()?;
    let intents = generate_intents(&matrix, None);
    let mut entries: Vec<RefEntry> = Vec::new();
    let mut phi: Vec<(DeweyId, usize)> = Vec::new();
    for (id, intent) in intents.into_iter().enumerate() {
        let mut likelihood = 1.0;
        let mut lists = Vec::new();
        for seg in &intent.segments {
            let kw = index.postings(&seg.keyword);
            match &seg.feature {
                Some(f) => {
                    let fl = index.postings(f);
                    let list: Vec<DeweyId> =
                        kw.iter().filter(|x| fl.contains(x)).cloned().collect();
                    likelihood *= list.len() as f64 / fl.len() as f64;
                    lists.push(list);
                }
                None => lists.push(kw.to_vec()),
            }
        }
        let slca = brute_slca_lists(&lists);
        let relevance = likelihood * slca.len() as f64;
        let fresh: Vec<DeweyId> = slca
            .iter()
            .filter(|v| !phi.iter().any(|(p, _)| v.is_ancestor_or_self_of(p)))
            .cloned()
            .collect();
        let replaced: Vec<DeweyId> = phi
            .iter()
            .filter(|(p, _)| fresh.iter().any(|v| p.is_ancestor_of(v)))
            .map(|(p, _)| p.clone())
            .collect();
        let union = phi.len() - replaced.len() + fresh.len();
        let dif = if slca.is_empty() {
            0.0
        } else if phi.is_empty() {
            1.0
        } else {
            fresh.len() as f64 / union as f64
        };
        let score = if phi.is_empty() {
            relevance
        } else {
            relevance * dif
        };
        if score <= 0.0 {
            continue;
        }
        if entries.len() >= k {
            if score <= entries.last().unwrap().score {
                continue;
            }
            let evicted = entries.pop().unwrap();
            phi.retain(|(_, owner)| *owner != evicted.id);
        }
        phi.retain(|(p, _)| !fresh.iter().any(|v| p.is_ancestor_of(v)));
        phi.extend(fresh.iter().map(|v| (v.clone(), id)));
        phi.sort();
        entries.push(RefEntry {
            id,
            intent,
            score,
            dif,
            relevance,
            results: fresh,
        });
        entries.sort_by(ref_order);
    }
    Some(RefOutcome { entries, phi })
}
