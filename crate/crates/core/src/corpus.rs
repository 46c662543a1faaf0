//! XML ingestion: Dewey numbering and entity text extraction.
//!
//! Entities are the statistical sample units. They are selected by element
//! name, and each one collects the tokens of all descendant text in document
//! order. Attribute values are ignored.

use std::collections::BTreeSet;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::dewey::DeweyId;
use crate::error::CorpusError;
use crate::text::{default_stopwords, tokenize};

/// Base of the logarithm used for mutual information. Only the natural log
/// is supported; it is recorded in the index manifest as `"e"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
}

impl LogBase {
    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Natural => "e",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "e" => Some(LogBase::Natural),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexConfig {
    pub entity_labels: BTreeSet<String>,
    /// Maximum positional distance between two tokens forming a co-occurring pair.
    pub window: usize,
    pub stopwords: BTreeSet<String>,
    pub log_base: LogBase,
}

impl IndexConfig {
    pub const DEFAULT_WINDOW: usize = 3;

    /// Config with the default window and stop-word list.
    pub fn new<I, S>(entity_labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        IndexConfig {
            entity_labels: entity_labels.into_iter().map(Into::into).collect(),
            window: Self::DEFAULT_WINDOW,
            stopwords: default_stopwords(),
            log_base: LogBase::Natural,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_stopwords<I, S>(mut self, stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = stopwords.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.window == 0 {
            return Err(CorpusError::Config("window must be at least 1".into()));
        }
        if self.entity_labels.is_empty() {
            return Err(CorpusError::Config(
                "at least one entity label is required".into(),
            ));
        }
        Ok(())
    }
}

/// A kept token and its position in the entity's unfiltered token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub term: String,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub id: DeweyId,
    pub label: String,
    /// Stop words removed; positions strictly increasing.
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityCorpus {
    pub entities: Vec<EntityRecord>,
}

impl EntityCorpus {
    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

struct Frame {
    id: DeweyId,
    children: u32,
    entity: Option<usize>,
}

struct Collector<'a> {
    config: &'a IndexConfig,
    stack: Vec<Frame>,
    root_seen: bool,
    entities: Vec<EntityRecord>,
    /// (entity index, next raw position) for every entity currently open.
    open: Vec<(usize, usize)>,
}

impl<'a> Collector<'a> {
    fn open_element(&mut self, name: &[u8], offset: u64) -> Result<(), CorpusError> {
        let name = std::str::from_utf8(name).map_err(|e| CorpusError::Xml {
            offset,
            message: format!("element name is not UTF-8: {e}"),
        })?;
        let id = match self.stack.last_mut() {
            Some(parent) => {
                parent.children += 1;
                parent.id.child(parent.children)
            }
            None if self.root_seen => {
                return Err(CorpusError::Xml {
                    offset,
                    message: "more than one root element".into(),
                })
            }
            None => {
                self.root_seen = true;
                DeweyId::root()
            }
        };
        let entity = if self.config.entity_labels.contains(name) {
            self.entities.push(EntityRecord {
                id: id.clone(),
                label: name.to_string(),
                tokens: Vec::new(),
            });
            let idx = self.entities.len() - 1;
            self.open.push((idx, 0));
            Some(idx)
        } else {
            None
        };
        self.stack.push(Frame {
            id,
            children: 0,
            entity,
        });
        Ok(())
    }

    fn close_element(&mut self) {
        if let Some(frame) = self.stack.pop() {
            if let Some(idx) = frame.entity {
                // entities close in LIFO order
                debug_assert_eq!(self.open.last().map(|e| e.0), Some(idx));
                self.open.pop();
            }
        }
    }

    fn text(&mut self, text: &str, offset: u64) -> Result<(), CorpusError> {
        if self.stack.is_empty() {
            if text.trim().is_empty() {
                return Ok(());
            }
            return Err(CorpusError::Xml {
                offset,
                message: "text outside the root element".into(),
            });
        }
        if self.open.is_empty() {
            return Ok(());
        }
        for term in tokenize(text) {
            let keep = !self.config.stopwords.contains(&term);
            for (idx, next) in self.open.iter_mut() {
                if keep {
                    self.entities[*idx].tokens.push(Token {
                        term: term.clone(),
                        position: *next,
                    });
                }
                *next += 1;
            }
        }
        Ok(())
    }
}

/// Parses `xml` and returns one record per entity element, in document order.
pub fn parse_corpus(xml: &[u8], config: &IndexConfig) -> Result<EntityCorpus, CorpusError> {
    config.validate()?;
    let mut reader = Reader::from_reader(xml);
    reader.config_mut().trim_text(false);
    let mut c = Collector {
        config,
        stack: Vec::new(),
        root_seen: false,
        entities: Vec::new(),
        open: Vec::new(),
    };
    loop {
        let offset = reader.buffer_position();
        let event = reader.read_event().map_err(|e| CorpusError::Xml {
            offset: reader.error_position(),
            message: e.to_string(),
        })?;
        match event {
            Event::Start(e) => c.open_element(e.name().as_ref(), offset)?,
            Event::Empty(e) => {
                c.open_element(e.name().as_ref(), offset)?;
                c.close_element();
            }
            Event::End(_) => c.close_element(),
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| CorpusError::Xml {
                    offset,
                    message: e.to_string(),
                })?;
                c.text(&text, offset)?;
            }
            Event::CData(t) => {
                let raw = t.into_inner();
                let text = std::str::from_utf8(&raw).map_err(|e| CorpusError::Xml {
                    offset,
                    message: format!("CDATA is not UTF-8: {e}"),
                })?;
                c.text(text, offset)?;
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if let Some(frame) = c.stack.last() {
        return Err(CorpusError::Xml {
            offset: xml.len() as u64,
            message: format!(
                "unexpected end of input: element {} is not closed",
                frame.id
            ),
        });
    }
    if !c.root_seen {
        return Err(CorpusError::Xml {
            offset: xml.len() as u64,
            message: "document has no root element".into(),
        });
    }
    if c.entities.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(EntityCorpus {
        entities: c.entities,
    })
}
