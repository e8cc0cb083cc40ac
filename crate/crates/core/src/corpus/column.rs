use std::fs;
use std::path::Path;

use super::{Dataset, LabelSet, Scheme, Sentence, Vocab};
use crate::{Error, Result};

/// Reads a `<token>\t<label>` column file. Blank lines separate sentences.
pub fn parse_column_file(path: impl AsRef<Path>, scheme: Scheme) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_column_str(&text, scheme)
}

pub fn parse_column_str(text: &str, scheme: Scheme) -> Result<Dataset> {
    let mut raw: Vec<(Vec<&str>, Vec<&str>)> = Vec::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();

    for (lineno, line) in text.split('\n').enumerate() {
        if line.is_empty() {
            if !tokens.is_empty() {
                raw.push((std::mem::take(&mut tokens), std::mem::take(&mut labels)));
            }
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(token), Some(label), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "expected exactly two tab-separated columns".into(),
            });
        };
        if token.is_empty() || label.is_empty() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "empty token or label".into(),
            });
        }
        if scheme != Scheme::Generic && token.chars().count() != 1 {
            return Err(Error::Scheme(format!(
                "line {}: token `{token}` must be a single character under the {scheme} scheme",
                lineno + 1
            )));
        }
        tokens.push(token);
        labels.push(label);
    }
    if !tokens.is_empty() {
        raw.push((tokens, labels));
    }
    if raw.is_empty() {
        return Err(Error::Empty("column file contains no sentences".into()));
    }

    let label_set = LabelSet::from_observed(scheme, raw.iter().flat_map(|(_, l)| l.iter().copied()))?;
    let vocab = Vocab::build(raw.iter().flat_map(|(t, _)| t.iter().copied()));
    let sentences = raw
        .into_iter()
        .enumerate()
        .map(|(id, (toks, labs))| Sentence {
            id,
            tokens: toks.into_iter().map(str::to_string).collect(),
            gold_labels: labs
                .into_iter()
                .map(|l| label_set.id(l).expect("label set covers observed labels"))
                .collect(),
        })
        .collect();

    Ok(Dataset {
        sentences,
        label_set,
        vocab,
    })
}

/// Canonical serialization: every sentence, including the last, ends with a blank line.
pub fn to_column_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    for s in &dataset.sentences {
        for (tok, &lab) in s.tokens.iter().zip(&s.gold_labels) {
            out.push_str(tok);
            out.push('\t');
            out.push_str(dataset.label_set.label(lab));
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn write_column_file(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_column_string(dataset)).map_err(|e| Error::io(path, e))
}
