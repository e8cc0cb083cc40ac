//! BMES span decoding and micro-averaged precision/recall/F1.

use serde::{Deserialize, Serialize};

use crate::corpus::{Bmes, Instance, LabelSet, Scheme};
use crate::tagger::TaggerParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub pos: Option<String>,
}

/// Sorted, disjoint spans tiling `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpanSet {
    pub spans: Vec<Span>,
    pub len: usize,
}

/// Greedy repairing decoder. `M`/`E` without an open word start one, a run
/// still open at the end is closed there, and a joint span takes the POS of
/// its first token. Labels without a BMES part (generic scheme) are single-token spans.
pub fn decode_bmes(labels: &[usize], label_set: &LabelSet) -> SpanSet {
    let mut spans = Vec::new();
    let mut open: Option<(usize, Option<String>)> = None;
    let pos_of = |id: usize| label_set.pos(id).map(str::to_string);
    for (i, &id) in labels.iter().enumerate() {
        let tag = label_set.bmes(id).unwrap_or(Bmes::S);
        match tag {
            Bmes::B | Bmes::S => {
                if let Some((start, pos)) = open.take() {
                    spans.push(Span { start, end: i, pos });
                }
                if tag == Bmes::S {
                    spans.push(Span {
                        start: i,
                        end: i + 1,
                        pos: pos_of(id),
                    });
                } else {
                    open = Some((i, pos_of(id)));
                }
            }
            Bmes::M => {
                if open.is_none() {
                    open = Some((i, pos_of(id)));
                }
            }
            Bmes::E => {
                let (start, pos) = open.take().unwrap_or((i, pos_of(id)));
                spans.push(Span { start, end: i + 1, pos });
            }
        }
    }
    if let Some((start, pos)) = open {
        spans.push(Span {
            start,
            end: labels.len(),
            pos,
        });
    }
    SpanSet {
        spans,
        len: labels.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpanCounts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SpanCounts {
    pub fn add(&mut self, other: SpanCounts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    pub fn prf(&self) -> Prf {
        let p = if self.predicted == 0 {
            0.0
        } else {
            self.correct as f64 / self.predicted as f64
        };
        let r = if self.gold == 0 {
            0.0
        } else {
            self.correct as f64 / self.gold as f64
        };
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Prf { p, r, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

/// Matching-span counts; with `joint` a span must also agree on POS.
pub fn span_counts(pred: &SpanSet, gold: &SpanSet, joint: bool) -> Result<SpanCounts> {
    if pred.len != gold.len {
        return Err(Error::LengthMismatch {
            pred: pred.len,
            gold: gold.len,
        });
    }
    // Both lists are sorted by start and disjoint, so a merge walk suffices.
    let (mut i, mut j, mut correct) = (0, 0, 0);
    while i < pred.spans.len() && j < gold.spans.len() {
        let (a, b) = (&pred.spans[i], &gold.spans[j]);
        if a.start == b.start {
            if a.end == b.end && (!joint || a.pos == b.pos) {
                correct += 1;
            }
            i += 1;
            j += 1;
        } else if a.start < b.start {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(SpanCounts {
        correct,
        predicted: pred.spans.len(),
        gold: gold.spans.len(),
    })
}

pub fn f1(pred: &SpanSet, gold: &SpanSet, joint: bool) -> Result<Prf> {
    Ok(span_counts(pred, gold, joint)?.prf())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cws: Prf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<Prf>,
    pub sentences: usize,
    pub tokens: usize,
}

/// Corpus-level micro-averaged scores of predicted against gold label sequences.
pub fn evaluate_labels<'a, I>(pairs: I, label_set: &LabelSet) -> Result<EvalReport>
where
    I: IntoIterator<Item = (&'a [usize], &'a [usize])>,
{
    let joint = label_set.scheme() == Scheme::Joint;
    let mut cws = SpanCounts::default();
    let mut joint_counts = SpanCounts::default();
    let (mut sentences, mut tokens) = (0, 0);
    for (pred, gold) in pairs {
        let p = decode_bmes(pred, label_set);
        let g = decode_bmes(gold, label_set);
        cws.add(span_counts(&p, &g, false)?);
        if joint {
            joint_counts.add(span_counts(&p, &g, true)?);
        }
        sentences += 1;
        tokens += gold.len();
    }
    if sentences == 0 {
        return Err(Error::Empty("nothing to evaluate".into()));
    }
    Ok(EvalReport {
        cws: cws.prf(),
        joint: joint.then(|| joint_counts.prf()),
        sentences,
        tokens,
    })
}

/// Decodes every sentence with dropout off and scores it against gold labels.
pub fn evaluate_tagger(params: &TaggerParams, data: &[Instance], label_set: &LabelSet) -> Result<EvalReport> {
    let preds = data
        .iter()
        .map(|s| params.predict(&s.token_ids))
        .collect::<Result<Vec<_>>>()?;
    evaluate_labels(
        preds.iter().zip(data).map(|(p, s)| (p.as_slice(), s.labels.as_slice())),
        label_set,
    )
}
