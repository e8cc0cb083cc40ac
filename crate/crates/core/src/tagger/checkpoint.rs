//! Versioned JSON checkpoints.
//!
//! Tensors are stored row-major as JSON numbers. `serde_json` writes the
//! shortest decimal that parses back to the same `f64`, so a save/load cycle
//! reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{TaggerConfig, TaggerParams, TENSOR_NAMES};
use crate::corpus::{LabelSet, Vocab};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "tcl-tagger-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    magic: String,
    format_version: u32,
    config: TaggerConfig,
    label_set: LabelSet,
    vocab: Vocab,
    tensors: Vec<NamedTensor>,
}

#[derive(Deserialize)]
struct Header {
    magic: Option<String>,
    format_version: Option<u32>,
}

/// A tagger together with everything needed to apply it to new data.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TaggerConfig,
    pub label_set: LabelSet,
    pub vocab: Vocab,
    pub params: TaggerParams,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let tensors = self
            .params
            .slices()
            .into_iter()
            .map(|(name, data)| NamedTensor {
                name: name.to_string(),
                shape: shape_of(&self.params, name),
                data: data.to_vec(),
            })
            .collect();
        let doc = Document {
            magic: CHECKPOINT_MAGIC.to_string(),
            format_version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            label_set: self.label_set.clone(),
            vocab: self.vocab.clone(),
            tensors,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let header: Header = serde_json::from_str(text).map_err(|e| Error::Truncated(e.to_string()))?;
        if header.magic.as_deref() != Some(CHECKPOINT_MAGIC) {
            return Err(Error::Version(format!(
                "bad magic {:?}, expected {CHECKPOINT_MAGIC:?}",
                header.magic
            )));
        }
        if header.format_version != Some(CHECKPOINT_VERSION) {
            return Err(Error::Version(format!(
                "unsupported format_version {:?}, expected {CHECKPOINT_VERSION}",
                header.format_version
            )));
        }
        let doc: Document = serde_json::from_str(text).map_err(|e| Error::Truncated(e.to_string()))?;
        doc.config.validate()?;

        let mut tensors = doc.tensors.into_iter();
        let mut next = |name: &str| -> Result<NamedTensor> {
            let t = tensors
                .next()
                .ok_or_else(|| Error::ShapeMismatch(format!("missing tensor `{name}`")))?;
            if t.name != name {
                return Err(Error::ShapeMismatch(format!("expected tensor `{name}`, found `{}`", t.name)));
            }
            if t.data.len() != t.shape.iter().product::<usize>() {
                return Err(Error::ShapeMismatch(format!(
                    "tensor `{name}` has {} values for shape {:?}",
                    t.data.len(),
                    t.shape
                )));
            }
            Ok(t)
        };
        let matrix = |t: NamedTensor| -> Result<Array2<f64>> {
            match t.shape[..] {
                [r, c] => Ok(Array2::from_shape_vec((r, c), t.data).expect("length checked")),
                _ => Err(Error::ShapeMismatch(format!("tensor `{}` is not a matrix", t.name))),
            }
        };
        let vector = |t: NamedTensor| -> Result<Array1<f64>> {
            match t.shape[..] {
                [_] => Ok(Array1::from(t.data)),
                _ => Err(Error::ShapeMismatch(format!("tensor `{}` is not a vector", t.name))),
            }
        };
        let params = TaggerParams {
            embedding: matrix(next(TENSOR_NAMES[0])?)?,
            hidden_w: matrix(next(TENSOR_NAMES[1])?)?,
            hidden_b: vector(next(TENSOR_NAMES[2])?)?,
            output_w: matrix(next(TENSOR_NAMES[3])?)?,
            output_b: vector(next(TENSOR_NAMES[4])?)?,
        };
        let ckpt = Checkpoint {
            config: doc.config,
            label_set: doc.label_set,
            vocab: doc.vocab,
            params,
        };
        ckpt.check_shapes()?;
        Ok(ckpt)
    }

    fn check_shapes(&self) -> Result<()> {
        let c = &self.config;
        let p = &self.params;
        let expected = [
            ("embedding", vec![self.vocab.len(), c.embed_dim]),
            ("hidden_w", vec![c.context_len() * c.embed_dim, c.hidden_dim]),
            ("hidden_b", vec![c.hidden_dim]),
            ("output_w", vec![c.hidden_dim, self.label_set.len()]),
            ("output_b", vec![self.label_set.len()]),
        ];
        for (name, want) in expected {
            let got = shape_of(p, name);
            if got != want {
                return Err(Error::ShapeMismatch(format!(
                    "tensor `{name}` has shape {got:?}, config implies {want:?}"
                )));
            }
        }
        Ok(())
    }

    /// Fails unless the checkpoint was trained on exactly `label_set`.
    pub fn ensure_compatible(&self, label_set: &LabelSet) -> Result<()> {
        if self.label_set != *label_set {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has {} {} labels, data has {} {} labels",
                self.label_set.len(),
                self.label_set.scheme(),
                label_set.len(),
                label_set.scheme()
            )));
        }
        Ok(())
    }
}

fn shape_of(p: &TaggerParams, name: &str) -> Vec<usize> {
    match name {
        "embedding" => p.embedding.shape().to_vec(),
        "hidden_w" => p.hidden_w.shape().to_vec(),
        "hidden_b" => p.hidden_b.shape().to_vec(),
        "output_w" => p.output_w.shape().to_vec(),
        "output_b" => p.output_b.shape().to_vec(),
        _ => unreachable!("unknown tensor {name}"),
    }
}

pub fn save_checkpoint(
    params: &TaggerParams,
    config: &TaggerConfig,
    label_set: &LabelSet,
    vocab: &Vocab,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let ckpt = Checkpoint {
        config: config.clone(),
        label_set: label_set.clone(),
        vocab: vocab.clone(),
        params: params.clone(),
    };
    ckpt.check_shapes()?;
    fs::write(path, ckpt.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)
}
