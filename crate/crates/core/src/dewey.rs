//! Dewey labels for XML element nodes.
//!
//! A label is the path of 1-based child ordinals from the document root, so
//! the root element is `1`, its second child `1.2`, and so on. Lexicographic
//! order on the components is document (pre-)order, and ancestry is a strict
//! prefix test.

use std::fmt;
use std::str::FromStr;

use crate::error::DeweyParseError;

/// Hierarchical node label. Never empty; every component is at least 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeweyId(Vec<u32>);

/// Position of one node relative to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    /// The first node is a proper ancestor of the second.
    Ancestor,
    /// The first node is a proper descendant of the second.
    Descendant,
    /// The first node comes before the second in document order and neither contains the other.
    Precedes,
    /// The first node comes after the second in document order and neither contains the other.
    Follows,
}

impl DeweyId {
    /// Builds a label from raw components.
    ///
    /// Returns `None` for an empty path or a zero component.
    pub fn new(components: Vec<u32>) -> Option<Self> {
        if components.is_empty() || components.contains(&0) {
            None
        } else {
            Some(DeweyId(components))
        }
    }

    pub fn root() -> Self {
        DeweyId(vec![1])
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// Number of components; the root has depth 1.
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// Label of the `ordinal`-th child (1-based).
    pub fn child(&self, ordinal: u32) -> Self {
        debug_assert!(ordinal >= 1);
        let mut c = Vec::with_capacity(self.0.len() + 1);
        c.extend_from_slice(&self.0);
        c.push(ordinal);
        DeweyId(c)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.len() > 1 {
            Some(DeweyId(self.0[..self.0.len() - 1].to_vec()))
        } else {
            None
        }
    }

    /// Proper-prefix test.
    pub fn is_ancestor_of(&self, other: &DeweyId) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }

    /// True when `self` equals `other` or is one of its ancestors.
    pub fn is_ancestor_or_self_of(&self, other: &DeweyId) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &DeweyId) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Lowest common ancestor. Both labels share the document root, so the
    /// result is always defined when both start with the same root ordinal.
    pub fn lca(&self, other: &DeweyId) -> Option<DeweyId> {
        let n = self.common_prefix_len(other);
        if n == 0 {
            None
        } else {
            Some(self.prefix(n))
        }
    }

    /// The ancestor-or-self at the given depth. Panics if `depth` is 0 or
    /// deeper than `self`.
    pub fn prefix(&self, depth: usize) -> DeweyId {
        assert!(depth >= 1 && depth <= self.0.len());
        DeweyId(self.0[..depth].to_vec())
    }

    /// Classifies `self` with respect to `other`.
    pub fn relation_to(&self, other: &DeweyId) -> Relation {
        let n = self.common_prefix_len(other);
        match (n == self.0.len(), n == other.0.len()) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::Ancestor,
            (false, true) => Relation::Descendant,
            (false, false) => {
                if self.0[n] < other.0[n] {
                    Relation::Precedes
                } else {
                    Relation::Follows
                }
            }
        }
    }
}

/// Relation of `a` to `b`.
pub fn dewey_relation(a: &DeweyId, b: &DeweyId) -> Relation {
    a.relation_to(b)
}

impl fmt::Display for DeweyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in &self.0 {
            if !first {
                f.write_str(".")?;
            }
            write!(f, "{c}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for DeweyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DeweyId({self})")
    }
}

impl FromStr for DeweyId {
    type Err = DeweyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(DeweyParseError(s.to_string()));
        }
        let mut components = Vec::new();
        for part in s.split('.') {
            // reject signs, whitespace and leading zeros so that Display round-trips
            if part.is_empty()
                || !part.bytes().all(|b| b.is_ascii_digit())
                || (part.len() > 1 && part.starts_with('0'))
            {
                return Err(DeweyParseError(s.to_string()));
            }
            let c: u32 = part.parse().map_err(|_| DeweyParseError(s.to_string()))?;
            components.push(c);
        }
        DeweyId::new(components).ok_or_else(|| DeweyParseError(s.to_string()))
    }
}

impl serde::Serialize for DeweyId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for DeweyId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True when `list` is strictly increasing in document order.
pub fn is_strictly_sorted(list: &[DeweyId]) -> bool {
    list.windows(2).all(|w| w[0] < w[1])
}

/// Index one past the last node of `list` that lies in the subtree rooted at
/// `node` (inclusive of `node` itself), assuming `list` is document-ordered and
/// `start` is the first index with `list[start] >= node`.
pub(crate) fn subtree_end(list: &[DeweyId], start: usize, node: &DeweyId) -> usize {
    start + list[start..].partition_point(|x| node.is_ancestor_or_self_of(x))
}
