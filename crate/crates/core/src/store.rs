//! On-disk index directory.
//!
//! ```text
//! manifest.json   {"version":1,"entityCount":N,"window":W,"entityLabels":[..],"logBase":"e"}
//! entities.jsonl  {"dewey":"1.2","label":"paper"}                one per entity, document order
//! postings.jsonl  {"term":"database","entities":["1.1","1.2"]}   terms ascending
//! cooccur.jsonl   {"a":"database","b":"system","count":3}        count desc, then (a, b) asc
//! ```
//!
//! All files are UTF-8 with LF line endings. Writing is deterministic, so two
//! saves of equal bundles are byte-identical.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::LogBase;
use crate::dewey::DeweyId;
use crate::error::StoreError;
use crate::index::{EntityMeta, IndexBundle, IndexSettings};

pub const FORMAT_VERSION: u64 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ENTITIES_FILE: &str = "entities.jsonl";
pub const POSTINGS_FILE: &str = "postings.jsonl";
pub const COOCCUR_FILE: &str = "cooccur.jsonl";

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Manifest {
    version: u64,
    entity_count: usize,
    window: usize,
    entity_labels: Vec<String>,
    log_base: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityLine {
    dewey: DeweyId,
    label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PostingLine {
    term: String,
    entities: Vec<DeweyId>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CooccurLine {
    a: String,
    b: String,
    count: u32,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_lines<T: Serialize>(
    path: &Path,
    items: impl IntoIterator<Item = T>,
) -> Result<(), StoreError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(&item).expect("index records always serialize");
        out.write_all(line.as_bytes()).map_err(io_err(path))?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Canonical on-disk order of co-occurrence triplets.
pub fn sorted_triplets(bundle: &IndexBundle) -> Vec<(&str, &str, u32)> {
    let mut triplets: Vec<(&str, &str, u32)> = bundle
        .cooccurrences()
        .iter()
        .map(|((a, b), c)| (a.as_str(), b.as_str(), *c))
        .collect();
    triplets.sort_by(|x, y| y.2.cmp(&x.2).then_with(|| (x.0, x.1).cmp(&(y.0, y.1))));
    triplets
}

pub fn save_index(bundle: &IndexBundle, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let settings = bundle.settings();
    let manifest = Manifest {
        version: FORMAT_VERSION,
        entity_count: bundle.entity_count(),
        window: settings.window,
        entity_labels: settings.entity_labels.iter().cloned().collect(),
        log_base: settings.log_base.as_str().to_string(),
    };
    write_lines(&dir.join(MANIFEST_FILE), [manifest])?;
    write_lines(
        &dir.join(ENTITIES_FILE),
        bundle.entities().iter().map(|e| EntityLine {
            dewey: e.id.clone(),
            label: e.label.clone(),
        }),
    )?;
    write_lines(
        &dir.join(POSTINGS_FILE),
        bundle
            .all_postings()
            .iter()
            .map(|(term, list)| PostingLine {
                term: term.clone(),
                entities: list.clone(),
            }),
    )?;
    write_lines(
        &dir.join(COOCCUR_FILE),
        sorted_triplets(bundle)
            .into_iter()
            .map(|(a, b, count)| CooccurLine {
                a: a.to_string(),
                b: b.to_string(),
                count,
            }),
    )
}

struct LineReader {
    path: PathBuf,
    text: String,
}

impl LineReader {
    fn open(dir: &Path, name: &str) -> Result<Self, StoreError> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok(LineReader { path, text })
    }

    fn corrupt(&self, line: usize, reason: impl Into<String>) -> StoreError {
        StoreError::Corrupt {
            path: self.path.clone(),
            line,
            reason: reason.into(),
        }
    }

    /// Parses every line as JSON, with 1-based line numbers.
    fn records<T: for<'de> Deserialize<'de>>(&self) -> Result<Vec<(usize, T)>, StoreError> {
        if !self.text.is_empty() && !self.text.ends_with('\n') {
            return Err(self.corrupt(self.text.lines().count(), "missing final newline"));
        }
        self.text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                serde_json::from_str(line)
                    .map(|rec| (i + 1, rec))
                    .map_err(|e| self.corrupt(i + 1, e.to_string()))
            })
            .collect()
    }
}

pub fn load_index(dir: &Path) -> Result<IndexBundle, StoreError> {
    let manifest_file = LineReader::open(dir, MANIFEST_FILE)?;
    // check the version before the full schema so that newer layouts report a version error
    let raw: serde_json::Value = serde_json::from_str(manifest_file.text.trim_end_matches('\n'))
        .map_err(|e| manifest_file.corrupt(1, e.to_string()))?;
    let version = raw
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| manifest_file.corrupt(1, "missing numeric version"))?;
    if version != FORMAT_VERSION {
        return Err(StoreError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let manifest: Manifest = match manifest_file.records::<Manifest>()?.pop() {
        Some((_, m)) if manifest_file.text.lines().count() == 1 => m,
        _ => return Err(manifest_file.corrupt(1, "manifest must be a single line")),
    };
    let log_base = LogBase::parse(&manifest.log_base).ok_or_else(|| {
        manifest_file.corrupt(1, format!("unknown logBase {:?}", manifest.log_base))
    })?;
    let entity_labels: BTreeSet<String> = manifest.entity_labels.iter().cloned().collect();
    if entity_labels.len() != manifest.entity_labels.len()
        || !manifest.entity_labels.windows(2).all(|w| w[0] < w[1])
    {
        return Err(manifest_file.corrupt(1, "entityLabels must be sorted and unique"));
    }
    let settings = IndexSettings {
        entity_labels,
        window: manifest.window,
        log_base,
    };

    let entities_file = LineReader::open(dir, ENTITIES_FILE)?;
    let mut entities: Vec<EntityMeta> = Vec::new();
    for (line, rec) in entities_file.records::<EntityLine>()? {
        if let Some(prev) = entities.last() {
            if prev.id >= rec.dewey {
                return Err(entities_file.corrupt(line, "entities are not in document order"));
            }
        }
        entities.push(EntityMeta {
            id: rec.dewey,
            label: rec.label,
        });
    }
    if entities.len() != manifest.entity_count {
        return Err(manifest_file.corrupt(
            1,
            format!(
                "entityCount {} but {} entity lines",
                manifest.entity_count,
                entities.len()
            ),
        ));
    }
    let known: HashSet<&DeweyId> = entities.iter().map(|e| &e.id).collect();

    let postings_file = LineReader::open(dir, POSTINGS_FILE)?;
    let mut postings: BTreeMap<String, Vec<DeweyId>> = BTreeMap::new();
    let mut last_term: Option<String> = None;
    for (line, rec) in postings_file.records::<PostingLine>()? {
        if last_term.as_deref().is_some_and(|t| t >= rec.term.as_str()) {
            return Err(postings_file.corrupt(line, "terms are not strictly ascending"));
        }
        if rec.entities.is_empty() {
            return Err(postings_file.corrupt(line, "empty posting list"));
        }
        if !rec.entities.windows(2).all(|w| w[0] < w[1]) {
            return Err(postings_file.corrupt(line, "posting list is not strictly sorted"));
        }
        if let Some(unknown) = rec.entities.iter().find(|d| !known.contains(d)) {
            return Err(postings_file.corrupt(line, format!("unknown entity {unknown}")));
        }
        last_term = Some(rec.term.clone());
        postings.insert(rec.term, rec.entities);
    }
    drop(known);

    let cooccur_file = LineReader::open(dir, COOCCUR_FILE)?;
    let mut cooccur: BTreeMap<(String, String), u32> = BTreeMap::new();
    let mut last: Option<(u32, String, String)> = None;
    for (line, rec) in cooccur_file.records::<CooccurLine>()? {
        if rec.a >= rec.b {
            return Err(cooccur_file.corrupt(line, "pair is not in canonical order"));
        }
        if rec.count == 0 {
            return Err(cooccur_file.corrupt(line, "zero count"));
        }
        if !postings.contains_key(&rec.a) || !postings.contains_key(&rec.b) {
            return Err(cooccur_file.corrupt(line, "pair references an unknown term"));
        }
        if let Some((pc, pa, pb)) = &last {
            let ordered = *pc > rec.count
                || (*pc == rec.count
                    && (pa.as_str(), pb.as_str()) < (rec.a.as_str(), rec.b.as_str()));
            if !ordered {
                return Err(
                    cooccur_file.corrupt(line, "triplets are not sorted by count desc, pair asc")
                );
            }
        }
        last = Some((rec.count, rec.a.clone(), rec.b.clone()));
        cooccur.insert((rec.a, rec.b), rec.count);
    }

    IndexBundle::from_parts(entities, postings, cooccur, settings)
        .map_err(|reason| manifest_file.corrupt(1, reason))
}
