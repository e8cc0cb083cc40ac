//! Seeded synthetic corpora with two lexically disjoint sub-domains.
//!
//! Each sub-domain has its own character pool and lexicon; sentences are
//! Zipf-weighted word sequences from one sub-domain. A configurable fraction
//! of training words is corrupted (boundary merge/split or POS flip) so that
//! some sentences are genuinely harder than others.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{word_spans_to_bmes, Dataset, LabelSet, Scheme, Sentence, Vocab, Word};
use crate::rng::{self, TclRng};
use crate::{Error, Result};

const POS_NAMES: [&str; 8] = ["AD", "CD", "DT", "JJ", "NN", "NR", "P", "VV"];
const CJK_BASE: u32 = 0x4E00;
const CJK_LEN: u32 = 0x5200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Label scheme of the emitted corpus (`bmes` or `joint`).
    pub scheme: Scheme,
    /// Lexicon sizes of sub-domains A and B.
    pub vocab_a: usize,
    pub vocab_b: usize,
    /// Distinct characters available to each sub-domain.
    pub chars_per_domain: usize,
    /// Probabilities of word lengths 1, 2 and 3.
    pub word_len_probs: [f64; 3],
    pub zipf_exponent: f64,
    /// Number of POS tags, 4 to 8.
    pub pos_tags: usize,
    /// Sentence length range in words, inclusive.
    pub min_words: usize,
    pub max_words: usize,
    pub train_size: usize,
    pub dev_size: usize,
    pub test_size: usize,
    /// Number of distinct sentences drawn before splitting.
    pub population: usize,
    /// Per-word corruption rate on the training split, in [0, 0.1].
    pub noise_rate: f64,
    /// Fraction of sentences drawn from sub-domain A.
    pub mix_ratio: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            scheme: Scheme::Bmes,
            vocab_a: 400,
            vocab_b: 400,
            chars_per_domain: 300,
            word_len_probs: [0.3, 0.5, 0.2],
            zipf_exponent: 1.0,
            pos_tags: 6,
            min_words: 3,
            max_words: 12,
            train_size: 4000,
            dev_size: 500,
            test_size: 500,
            population: 6000,
            noise_rate: 0.05,
            mix_ratio: 0.7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.scheme == Scheme::Generic {
            return bad("synthetic corpora use the bmes or joint scheme".into());
        }
        if self.vocab_a == 0 || self.vocab_b == 0 {
            return bad("sub-domain vocabulary sizes must be positive".into());
        }
        if self.chars_per_domain == 0 || 2 * self.chars_per_domain as u64 > CJK_LEN as u64 {
            return bad(format!("chars_per_domain must be in 1..={}", CJK_LEN / 2));
        }
        if self.word_len_probs.iter().any(|p| !p.is_finite() || *p < 0.0)
            || self.word_len_probs.iter().sum::<f64>() <= 0.0
        {
            return bad("word_len_probs must be non-negative with a positive sum".into());
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return bad("zipf_exponent must be non-negative".into());
        }
        if !(4..=8).contains(&self.pos_tags) {
            return bad(format!("pos_tags must be in 4..=8, got {}", self.pos_tags));
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return bad("sentence length range must satisfy 1 <= min_words <= max_words".into());
        }
        if self.train_size == 0 || self.dev_size == 0 || self.test_size == 0 {
            return bad("split sizes must be positive".into());
        }
        if !(0.0..=0.1).contains(&self.noise_rate) {
            return bad(format!("noise_rate must be in [0, 0.1], got {}", self.noise_rate));
        }
        if !(0.0..=1.0).contains(&self.mix_ratio) {
            return bad(format!("mix_ratio must be in [0, 1], got {}", self.mix_ratio));
        }
        let needed = self.train_size + self.dev_size + self.test_size;
        if needed > self.population {
            return bad(format!(
                "split sizes ({needed} sentences) exceed the population of {}",
                self.population
            ));
        }
        Ok(())
    }

    /// Label set of the generated corpus.
    pub fn label_set(&self) -> LabelSet {
        match self.scheme {
            Scheme::Joint => LabelSet::joint(&POS_NAMES[..self.pos_tags]).expect("static POS names"),
            _ => LabelSet::segmentation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
}

struct Lexicon {
    words: Vec<Word>,
    weights: WeightedIndex<f64>,
}

fn build_lexicon(cfg: &SynthConfig, size: usize, char_base: u32, rng: &mut TclRng) -> Result<Lexicon> {
    let lengths = WeightedIndex::new(cfg.word_len_probs).map_err(|e| Error::Config(e.to_string()))?;
    let pool = cfg.chars_per_domain as u32;
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(size);
    let mut attempts = 0usize;
    while words.len() < size {
        attempts += 1;
        if attempts > size * 200 {
            return Err(Error::Config(format!(
                "cannot draw {size} distinct words from {pool} characters; raise chars_per_domain"
            )));
        }
        let len = lengths.sample(rng) + 1;
        let surface: String = (0..len)
            .map(|_| char::from_u32(char_base + rng.gen_range(0..pool)).expect("CJK code point"))
            .collect();
        if seen.insert(surface.clone()) {
            let pos = POS_NAMES[rng.gen_range(0..cfg.pos_tags)];
            words.push(Word::tagged(surface, pos));
        }
    }
    let weights = (0..size)
        .map(|r| 1.0 / ((r + 1) as f64).powf(cfg.zipf_exponent))
        .collect::<Vec<_>>();
    let weights = WeightedIndex::new(weights).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Lexicon { words, weights })
}

fn corrupt(words: &mut Vec<Word>, cfg: &SynthConfig, rng: &mut TclRng) {
    let mut i = 0;
    while i < words.len() {
        if rng.gen::<f64>() < cfg.noise_rate {
            let mut ops = Vec::with_capacity(3);
            if i + 1 < words.len() {
                ops.push(0u8);
            }
            if words[i].surface.chars().count() >= 2 {
                ops.push(1);
            }
            if cfg.scheme == Scheme::Joint {
                ops.push(2);
            }
            if !ops.is_empty() {
                match ops[rng.gen_range(0..ops.len())] {
                    0 => {
                        let next = words.remove(i + 1);
                        words[i].surface.push_str(&next.surface);
                    }
                    1 => {
                        let chars: Vec<char> = words[i].surface.chars().collect();
                        let cut = rng.gen_range(1..chars.len());
                        let tail: String = chars[cut..].iter().collect();
                        words[i].surface = chars[..cut].iter().collect();
                        let tail = Word {
                            surface: tail,
                            pos: words[i].pos.clone(),
                        };
                        words.insert(i + 1, tail);
                        i += 1;
                    }
                    _ => {
                        let current = words[i].pos.as_deref();
                        let choices: Vec<&str> = POS_NAMES[..cfg.pos_tags]
                            .iter()
                            .copied()
                            .filter(|p| Some(*p) != current)
                            .collect();
                        words[i].pos = Some(choices[rng.gen_range(0..choices.len())].to_string());
                    }
                }
            }
        }
        i += 1;
    }
}

fn to_dataset(sentences: &[Vec<Word>], cfg: &SynthConfig, label_set: &LabelSet) -> Result<Vec<Sentence>> {
    sentences
        .iter()
        .enumerate()
        .map(|(id, words)| {
            let words: Vec<Word> = match cfg.scheme {
                Scheme::Joint => words.clone(),
                _ => words.iter().map(|w| Word::new(w.surface.clone())).collect(),
            };
            let (tokens, labels) = word_spans_to_bmes(&words)?;
            Ok(Sentence {
                id,
                tokens,
                gold_labels: labels
                    .iter()
                    .map(|l| label_set.id(l).expect("generated labels are in the label set"))
                    .collect(),
            })
        })
        .collect()
}

/// Generates train/dev/test splits; identical `(config, seed)` gives identical corpora.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = rng::stream(seed, &[rng::tag::SYNTH]);
    let lex_a = build_lexicon(cfg, cfg.vocab_a, CJK_BASE, &mut rng)?;
    let lex_b = build_lexicon(cfg, cfg.vocab_b, CJK_BASE + cfg.chars_per_domain as u32, &mut rng)?;

    let mut seen = HashSet::new();
    let mut population: Vec<Vec<Word>> = Vec::with_capacity(cfg.population);
    let mut attempts = 0usize;
    while population.len() < cfg.population && attempts < cfg.population * 20 {
        attempts += 1;
        let lex = if rng.gen::<f64>() < cfg.mix_ratio { &lex_a } else { &lex_b };
        let n = rng.gen_range(cfg.min_words..=cfg.max_words);
        let words: Vec<Word> = (0..n).map(|_| lex.words[lex.weights.sample(&mut rng)].clone()).collect();
        let key: String = words.iter().map(|w| w.surface.as_str()).collect();
        if seen.insert(key) {
            population.push(words);
        }
    }
    let needed = cfg.train_size + cfg.dev_size + cfg.test_size;
    if population.len() < needed {
        return Err(Error::Config(format!(
            "split sizes ({needed} sentences) exceed the {} distinct sentences generated",
            population.len()
        )));
    }

    let (train_words, rest) = population.split_at_mut(cfg.train_size);
    for words in train_words.iter_mut() {
        corrupt(words, cfg, &mut rng);
    }
    let (dev_words, rest) = rest.split_at(cfg.dev_size);
    let test_words = &rest[..cfg.test_size];

    let label_set = cfg.label_set();
    let train_sentences = to_dataset(train_words, cfg, &label_set)?;
    let vocab = Vocab::build(train_sentences.iter().flat_map(|s| s.tokens.iter().map(String::as_str)));
    let make = |sentences| Dataset {
        sentences,
        label_set: label_set.clone(),
        vocab: vocab.clone(),
    };
    Ok(SynthCorpus {
        train: make(train_sentences),
        dev: make(to_dataset(dev_words, cfg, &label_set)?),
        test: make(to_dataset(test_words, cfg, &label_set)?),
    })
}
