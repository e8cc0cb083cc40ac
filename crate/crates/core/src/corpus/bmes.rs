use super::{split_joint_label, Bmes};
use crate::{Error, Result};

/// A word with an optional part-of-speech tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pub surface: String,
    pub pos: Option<String>,
}

impl Word {
    pub fn new(surface: impl Into<String>) -> Self {
        Word {
            surface: surface.into(),
            pos: None,
        }
    }

    pub fn tagged(surface: impl Into<String>, pos: impl Into<String>) -> Self {
        Word {
            surface: surface.into(),
            pos: Some(pos.into()),
        }
    }
}

fn label_for(pos: Option<&str>, tag: Bmes) -> String {
    match pos {
        Some(p) => format!("{p}-{}", tag.as_str()),
        None => tag.as_str().to_string(),
    }
}

/// Encodes words as per-character tokens with BMES (or `<pos>-BMES`) labels.
pub fn word_spans_to_bmes(words: &[Word]) -> Result<(Vec<String>, Vec<String>)> {
    if words.is_empty() {
        return Err(Error::Empty("word list is empty".into()));
    }
    let tagged = words[0].pos.is_some();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for word in words {
        if word.pos.is_some() != tagged {
            return Err(Error::Scheme("words mix tagged and untagged entries".into()));
        }
        let chars: Vec<char> = word.surface.chars().collect();
        let pos = word.pos.as_deref();
        match chars.len() {
            0 => return Err(Error::Empty("word with empty surface".into())),
            1 => labels.push(label_for(pos, Bmes::S)),
            n => {
                labels.push(label_for(pos, Bmes::B));
                for _ in 1..n - 1 {
                    labels.push(label_for(pos, Bmes::M));
                }
                labels.push(label_for(pos, Bmes::E));
            }
        }
        tokens.extend(chars.into_iter().map(String::from));
    }
    Ok((tokens, labels))
}

/// Strict inverse of [`word_spans_to_bmes`]; rejects ill-formed sequences.
/// (Repairing decoding for model output lives in [`crate::eval`].)
pub fn bmes_to_word_spans<T: AsRef<str>, L: AsRef<str>>(tokens: &[T], labels: &[L]) -> Result<Vec<Word>> {
    if tokens.len() != labels.len() {
        return Err(Error::LengthMismatch {
            pred: labels.len(),
            gold: tokens.len(),
        });
    }
    let mut words = Vec::new();
    let mut open: Option<(String, Option<String>)> = None;
    for (i, (tok, label)) in tokens.iter().zip(labels).enumerate() {
        let label = label.as_ref();
        let (pos, tag) = match Bmes::parse(label) {
            Some(tag) => (None, tag),
            None => {
                let (p, tag) = split_joint_label(label)
                    .ok_or_else(|| Error::Scheme(format!("unrecognised label `{label}`")))?;
                (Some(p.to_string()), tag)
            }
        };
        let ill_formed = || Error::Scheme(format!("ill-formed BMES sequence at token {i}"));
        match (tag, open.take()) {
            (Bmes::S, None) => words.push(Word {
                surface: tok.as_ref().to_string(),
                pos,
            }),
            (Bmes::B, None) => open = Some((tok.as_ref().to_string(), pos)),
            (Bmes::M, Some((mut s, p))) if p == pos => {
                s.push_str(tok.as_ref());
                open = Some((s, p));
            }
            (Bmes::E, Some((mut s, p))) if p == pos => {
                s.push_str(tok.as_ref());
                words.push(Word { surface: s, pos: p });
            }
            _ => return Err(ill_formed()),
        }
    }
    if open.is_some() {
        return Err(Error::Scheme("unterminated word at end of sequence".into()));
    }
    Ok(words)
}
