//! Relation mentions, label inventories, entity markers and corpora.

mod io;
mod split;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{parse_corpus, read_corpus, render_corpus, write_corpus};
pub use split::{stratified_split, Split, SplitSpec};
pub use synth::{generate_synthetic, PresetName};

pub const E1_OPEN: &str = "[E1]";
pub const E1_CLOSE: &str = "[/E1]";
pub const E2_OPEN: &str = "[E2]";
pub const E2_CLOSE: &str = "[/E2]";
pub const MARKERS: [&str; 4] = [E1_OPEN, E1_CLOSE, E2_OPEN, E2_CLOSE];

pub fn is_marker(token: &str) -> bool {
    MARKERS.contains(&token)
}

/// Index into a [`LabelInventory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelId(pub usize);

impl LabelId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A sentence with two entity spans and an optional gold relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationMention {
    tokens: Vec<String>,
    e1: Span,
    e2: Span,
    gold: Option<LabelId>,
}

impl RelationMention {
    pub fn new(tokens: Vec<String>, e1: Span, e2: Span, gold: Option<LabelId>) -> Result<Self> {
        let n = tokens.len();
        for (name, span) in [("e1", e1), ("e2", e2)] {
            if span.start >= span.end || span.end > n {
                return Err(Error::SpanOutOfBounds {
                    index: 0,
                    message: format!(
                        "{name} span [{}, {}) invalid for {n} tokens",
                        span.start, span.end
                    ),
                });
            }
        }
        if e1.overlaps(&e2) {
            return Err(Error::SpanOutOfBounds {
                index: 0,
                message: "entity spans overlap".into(),
            });
        }
        if let Some(t) = tokens.iter().find(|t| is_marker(t)) {
            return Err(Error::SpanOutOfBounds {
                index: 0,
                message: format!("reserved marker token `{t}` in mention"),
            });
        }
        Ok(RelationMention { tokens, e1, e2, gold })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn e1(&self) -> Span {
        self.e1
    }

    pub fn e2(&self) -> Span {
        self.e2
    }

    pub fn gold(&self) -> Option<LabelId> {
        self.gold
    }

    pub fn in_entity(&self, index: usize) -> bool {
        self.e1.contains(index) || self.e2.contains(index)
    }

    pub fn with_gold(mut self, gold: Option<LabelId>) -> Self {
        self.gold = gold;
        self
    }

    /// Replaces non-entity tokens. Entity spans are kept in place, so the
    /// replacement must have the same length and leave entity tokens alone.
    pub(crate) fn with_tokens(&self, tokens: Vec<String>) -> Result<Self> {
        debug_assert_eq!(tokens.len(), self.tokens.len());
        RelationMention::new(tokens, self.e1, self.e2, self.gold)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelInventory {
    names: Vec<String>,
    no_relation: LabelId,
}

impl LabelInventory {
    pub fn new(names: Vec<String>, no_relation: &str) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidInventory(format!("duplicate label `{n}`")));
            }
        }
        let id = names
            .iter()
            .position(|n| n == no_relation)
            .ok_or_else(|| {
                Error::InvalidInventory(format!("no-relation label `{no_relation}` not in labels"))
            })?;
        Ok(LabelInventory {
            names,
            no_relation: LabelId(id),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<LabelId> {
        self.names.iter().position(|n| n == name).map(LabelId)
    }

    pub fn no_relation(&self) -> LabelId {
        self.no_relation
    }

    pub fn contains(&self, id: LabelId) -> bool {
        id.0 < self.names.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = LabelId> {
        (0..self.names.len()).map(LabelId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    inventory: LabelInventory,
    mentions: Vec<RelationMention>,
}

impl Corpus {
    pub fn new(inventory: LabelInventory, mentions: Vec<RelationMention>) -> Result<Self> {
        for (index, m) in mentions.iter().enumerate() {
            if let Some(g) = m.gold {
                if !inventory.contains(g) {
                    return Err(Error::InvalidInventory(format!(
                        "mention {index} has label id {g} outside inventory of {}",
                        inventory.len()
                    )));
                }
            }
        }
        Ok(Corpus { inventory, mentions })
    }

    pub fn empty(inventory: LabelInventory) -> Self {
        Corpus {
            inventory,
            mentions: Vec::new(),
        }
    }

    pub fn inventory(&self) -> &LabelInventory {
        &self.inventory
    }

    pub fn mentions(&self) -> &[RelationMention] {
        &self.mentions
    }

    pub fn len(&self) -> usize {
        self.mentions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mentions.is_empty()
    }

    pub fn into_mentions(self) -> Vec<RelationMention> {
        self.mentions
    }

    /// Per-class gold counts, indexed by label id. Unlabeled mentions are
    /// not counted.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.inventory.len()];
        for m in &self.mentions {
            if let Some(g) = m.gold {
                counts[g.0] += 1;
            }
        }
        counts
    }

    /// Same mentions with gold labels removed: what a learner may see of an
    /// unlabeled pool.
    pub fn hide_labels(&self) -> Corpus {
        Corpus {
            inventory: self.inventory.clone(),
            mentions: self
                .mentions
                .iter()
                .map(|m| m.clone().with_gold(None))
                .collect(),
        }
    }

    pub fn gold_labels(&self) -> Vec<Option<LabelId>> {
        self.mentions.iter().map(|m| m.gold).collect()
    }

    /// Concatenates two corpora over the same inventory.
    pub fn concat(&self, other: &Corpus) -> Result<Corpus> {
        if self.inventory != other.inventory {
            return Err(Error::InvalidInventory(
                "cannot concatenate corpora with different inventories".into(),
            ));
        }
        let mut mentions = self.mentions.clone();
        mentions.extend(other.mentions.iter().cloned());
        Ok(Corpus {
            inventory: self.inventory.clone(),
            mentions,
        })
    }
}

/// Token sequence with the four reserved markers around the entities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarkedSequence {
    tokens: Vec<String>,
    e1_marker_pos: usize,
    e2_marker_pos: usize,
}

impl MarkedSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Position of the opening `[E1]` marker.
    pub fn e1_marker_pos(&self) -> usize {
        self.e1_marker_pos
    }

    /// Position of the opening `[E2]` marker.
    pub fn e2_marker_pos(&self) -> usize {
        self.e2_marker_pos
    }

    /// Position of the closing marker that pairs with the opening marker at
    /// `open`.
    pub fn closing_pos(&self, open: usize) -> usize {
        let close = if self.tokens[open] == E1_OPEN {
            E1_CLOSE
        } else {
            E2_CLOSE
        };
        open + self.tokens[open..]
            .iter()
            .position(|t| t == close)
            .expect("marked sequence has both closing markers")
    }

    /// Removes the four markers.
    pub fn strip(&self) -> Vec<String> {
        self.tokens
            .iter()
            .filter(|t| !is_marker(t))
            .cloned()
            .collect()
    }
}

pub fn mark_entities(mention: &RelationMention) -> MarkedSequence {
    let n = mention.tokens.len();
    let mut tokens = Vec::with_capacity(n + 4);
    let (mut e1_pos, mut e2_pos) = (0, 0);
    for i in 0..=n {
        if i == mention.e1.end {
            tokens.push(E1_CLOSE.to_string());
        }
        if i == mention.e2.end {
            tokens.push(E2_CLOSE.to_string());
        }
        if i == n {
            break;
        }
        if i == mention.e1.start {
            e1_pos = tokens.len();
            tokens.push(E1_OPEN.to_string());
        }
        if i == mention.e2.start {
            e2_pos = tokens.len();
            tokens.push(E2_OPEN.to_string());
        }
        tokens.push(mention.tokens[i].clone());
    }
    MarkedSequence {
        tokens,
        e1_marker_pos: e1_pos,
        e2_marker_pos: e2_pos,
    }
}
