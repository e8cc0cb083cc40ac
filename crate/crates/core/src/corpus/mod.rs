//! Corpus types, column-file IO, BMES encoding and the synthetic generator.

mod bmes;
mod column;
mod synth;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use bmes::{bmes_to_word_spans, word_spans_to_bmes, Word};
pub use column::{parse_column_file, parse_column_str, to_column_string, write_column_file};
pub use synth::{generate_synthetic, SynthConfig, SynthCorpus};

/// Reserved vocabulary id for tokens not seen in training.
pub const UNK_ID: u32 = 0;
/// Reserved vocabulary id used to pad context windows past sentence bounds.
pub const PAD_ID: u32 = 1;

const UNK_TOKEN: &str = "<unk>";
const PAD_TOKEN: &str = "<pad>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Character-level word segmentation, labels B/M/E/S.
    #[serde(alias = "segmentation")]
    Bmes,
    /// Joint segmentation and POS tagging, labels `<pos>-<B|M|E|S>`.
    Joint,
    /// Arbitrary tag inventory, sorted lexicographically.
    Generic,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bmes" | "segmentation" | "cws" => Ok(Scheme::Bmes),
            "joint" => Ok(Scheme::Joint),
            "generic" => Ok(Scheme::Generic),
            other => Err(Error::Config(format!("unknown label scheme `{other}`"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bmes => "bmes",
            Scheme::Joint => "joint",
            Scheme::Generic => "generic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bmes {
    B,
    M,
    E,
    S,
}

impl Bmes {
    pub const ALL: [Bmes; 4] = [Bmes::B, Bmes::M, Bmes::E, Bmes::S];

    pub fn as_str(self) -> &'static str {
        match self {
            Bmes::B => "B",
            Bmes::M => "M",
            Bmes::E => "E",
            Bmes::S => "S",
        }
    }

    pub fn parse(s: &str) -> Option<Bmes> {
        match s {
            "B" => Some(Bmes::B),
            "M" => Some(Bmes::M),
            "E" => Some(Bmes::E),
            "S" => Some(Bmes::S),
            _ => None,
        }
    }
}

/// Splits a joint label `<pos>-<B|M|E|S>` at its last separator.
pub fn split_joint_label(label: &str) -> Option<(&str, Bmes)> {
    let (pos, tag) = label.rsplit_once('-')?;
    if pos.is_empty() {
        return None;
    }
    Some((pos, Bmes::parse(tag)?))
}

/// The ordered tag inventory. A label's id is its position in the list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LabelSetRepr", into = "LabelSetRepr")]
pub struct LabelSet {
    labels: Vec<String>,
    scheme: Scheme,
    index: HashMap<String, usize>,
    // Per-id (pos, bmes) decomposition; empty for the generic scheme.
    parts: Vec<(Option<String>, Bmes)>,
}

#[derive(Serialize, Deserialize)]
struct LabelSetRepr {
    scheme: Scheme,
    labels: Vec<String>,
}

impl TryFrom<LabelSetRepr> for LabelSet {
    type Error = Error;

    fn try_from(repr: LabelSetRepr) -> Result<Self> {
        LabelSet::new(repr.scheme, repr.labels)
    }
}

impl From<LabelSet> for LabelSetRepr {
    fn from(set: LabelSet) -> Self {
        LabelSetRepr {
            scheme: set.scheme,
            labels: set.labels,
        }
    }
}

impl LabelSet {
    /// Builds a label set from an explicit ordered list, checking it against `scheme`.
    pub fn new(scheme: Scheme, labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Scheme("label set is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        let mut parts = Vec::new();
        for (id, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::Scheme("empty label".into()));
            }
            if index.insert(label.clone(), id).is_some() {
                return Err(Error::Scheme(format!("duplicate label `{label}`")));
            }
            match scheme {
                Scheme::Bmes => {
                    let tag = Bmes::parse(label).ok_or_else(|| {
                        Error::Scheme(format!("`{label}` is not a BMES label"))
                    })?;
                    parts.push((None, tag));
                }
                Scheme::Joint => {
                    let (pos, tag) = split_joint_label(label).ok_or_else(|| {
                        Error::Scheme(format!("`{label}` is not a `<pos>-<B|M|E|S>` label"))
                    })?;
                    parts.push((Some(pos.to_string()), tag));
                }
                Scheme::Generic => {}
            }
        }
        Ok(LabelSet {
            labels,
            scheme,
            index,
            parts,
        })
    }

    /// The canonical segmentation inventory `B, M, E, S`.
    pub fn segmentation() -> Self {
        let labels = Bmes::ALL.iter().map(|b| b.as_str().to_string()).collect();
        LabelSet::new(Scheme::Bmes, labels).expect("canonical BMES labels are valid")
    }

    /// Joint inventory: POS tags sorted lexicographically, BMES within each.
    pub fn joint<I, S>(pos_tags: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tags: Vec<String> = pos_tags.into_iter().map(|s| s.as_ref().to_string()).collect();
        tags.sort();
        tags.dedup();
        let mut labels = Vec::with_capacity(tags.len() * 4);
        for tag in &tags {
            if tag.is_empty() {
                return Err(Error::Scheme("empty POS tag".into()));
            }
            for b in Bmes::ALL {
                labels.push(format!("{tag}-{}", b.as_str()));
            }
        }
        LabelSet::new(Scheme::Joint, labels)
    }

    /// Builds the canonical label set of `scheme` covering the observed labels.
    pub fn from_observed<'a, I>(scheme: Scheme, observed: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        match scheme {
            Scheme::Bmes => {
                for label in observed {
                    if Bmes::parse(label).is_none() {
                        return Err(Error::Scheme(format!("`{label}` is not a BMES label")));
                    }
                }
                Ok(LabelSet::segmentation())
            }
            Scheme::Joint => {
                let mut tags = Vec::new();
                for label in observed {
                    let (pos, _) = split_joint_label(label).ok_or_else(|| {
                        Error::Scheme(format!("`{label}` is not a `<pos>-<B|M|E|S>` label"))
                    })?;
                    tags.push(pos);
                }
                LabelSet::joint(tags)
            }
            Scheme::Generic => {
                let mut labels: Vec<String> = observed.into_iter().map(str::to_string).collect();
                labels.sort();
                labels.dedup();
                LabelSet::new(Scheme::Generic, labels)
            }
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    /// Boundary tag of a label id; `None` for the generic scheme.
    pub fn bmes(&self, id: usize) -> Option<Bmes> {
        self.parts.get(id).map(|(_, b)| *b)
    }

    /// POS part of a joint label id.
    pub fn pos(&self, id: usize) -> Option<&str> {
        self.parts.get(id).and_then(|(p, _)| p.as_deref())
    }

    /// POS tags of a joint inventory in canonical order.
    pub fn pos_tags(&self) -> Vec<&str> {
        let mut tags: Vec<&str> = self.parts.iter().filter_map(|(p, _)| p.as_deref()).collect();
        tags.dedup();
        tags
    }
}

/// Token to id map. Ids 0 and 1 are reserved for unknown and padding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::from(vec![UNK_TOKEN.to_string(), PAD_TOKEN.to_string()])
    }
}

impl Vocab {
    /// Assigns ids in first-appearance order, starting after the reserved ids.
    pub fn build<'a, I>(tokens: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut vocab = Vocab::default();
        for tok in tokens {
            if !vocab.index.contains_key(tok) {
                let id = vocab.tokens.len() as u32;
                vocab.tokens.push(tok.to_string());
                vocab.index.insert(tok.to_string(), id);
            }
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Id of `token`, or [`UNK_ID`] when it was not seen in training.
    pub fn lookup(&self, token: &str) -> u32 {
        self.get(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: usize,
    pub tokens: Vec<String>,
    pub gold_labels: Vec<usize>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A sentence encoded against a vocabulary, the form the tagger consumes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: usize,
    pub token_ids: Vec<u32>,
    pub labels: Vec<usize>,
}

impl Instance {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub sentences: Vec<Sentence>,
    pub label_set: LabelSet,
    pub vocab: Vocab,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Encodes every sentence against this dataset's vocabulary.
    pub fn instances(&self) -> Vec<Instance> {
        self.sentences
            .iter()
            .map(|s| Instance {
                id: s.id,
                token_ids: s.tokens.iter().map(|t| self.vocab.lookup(t)).collect(),
                labels: s.gold_labels.clone(),
            })
            .collect()
    }

    /// Re-expresses this dataset in another label set and vocabulary, typically
    /// the training split's. Fails if a label is absent from `label_set`.
    pub fn conform_to(mut self, label_set: &LabelSet, vocab: &Vocab) -> Result<Dataset> {
        if label_set.scheme() != self.label_set.scheme() {
            return Err(Error::Scheme(format!(
                "dataset uses the {} scheme, expected {}",
                self.label_set.scheme(),
                label_set.scheme()
            )));
        }
        if self.label_set != *label_set {
            let remap: Vec<Option<usize>> = self
                .label_set
                .labels()
                .iter()
                .map(|l| label_set.id(l))
                .collect();
            for sentence in &mut self.sentences {
                for label in &mut sentence.gold_labels {
                    *label = remap[*label].ok_or_else(|| {
                        Error::Scheme(format!(
                            "label `{}` of sentence {} is not in the training label set",
                            self.label_set.label(*label),
                            sentence.id
                        ))
                    })?;
                }
            }
            self.label_set = label_set.clone();
        }
        self.vocab = vocab.clone();
        Ok(self)
    }

    /// Checks the structural invariants: non-empty aligned sentences, valid
    /// label ids and contiguous sentence ids.
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.sentences.iter().enumerate() {
            if s.id != i {
                return Err(Error::Config(format!("sentence ids must be 0..n, found {} at {i}", s.id)));
            }
            if s.tokens.is_empty() || s.tokens.len() != s.gold_labels.len() {
                return Err(Error::Config(format!(
                    "sentence {i} has {} tokens and {} labels",
                    s.tokens.len(),
                    s.gold_labels.len()
                )));
            }
            if let Some(&bad) = s.gold_labels.iter().find(|&&l| l >= self.label_set.len()) {
                return Err(Error::Scheme(format!("label id {bad} out of range in sentence {i}")));
            }
        }
        Ok(())
    }
}
