//! Two-stage curriculum learning for sequence labeling.
//!
//! A transfer teacher is trained briefly on the whole corpus and its
//! difficulty scores seed an easy-to-hard ordering. A student then trains on
//! a growing prefix of that ordering, re-ranking the remaining pool with its
//! own difficulty scores after every epoch, while a root pacing function
//! decides how much of the corpus is admitted.
//!
//! The crate is organised as:
//!
//! - [`corpus`]: column files, BMES encoding, the synthetic corpus generator
//! - [`tagger`]: a window-MLP softmax tagger with hand-written backprop
//! - [`difficulty`]: per-sentence difficulty metrics (TLC, MNLP, BU, length, random)
//! - [`scheduler`]: the root pacing function
//! - [`curriculum`]: the teacher/student orchestration and run logs
//! - [`eval`]: BMES span decoding and micro-averaged F1
//! - `cli` (feature `cli`): the `tcl` command-line tool

pub mod corpus;
pub mod curriculum;
pub mod difficulty;
pub mod error;
pub mod eval;
pub mod rng;
pub mod scheduler;
pub mod tagger;

#[cfg(feature = "cli")]
pub mod cli;

mod clock;

pub use error::{Error, Result};
