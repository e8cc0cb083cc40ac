//! Sentence difficulty metrics.
//!
//! Model-aware metrics read the tagger's per-token label distributions:
//!
//! - least confidence of a token is `1 - max_y P(y | x)`;
//! - TLC averages the `N` largest token least-confidence values;
//! - MNLP is the length-normalised negative log of the product of the
//!   per-token max probabilities;
//! - BU runs `K` Monte-Carlo dropout passes, sums the per-label variance of
//!   each token, and adds the largest token variance to the mean one.
//!
//! Two baselines need no model: sentence length, and a fixed pseudo-random
//! score per sentence. Smaller scores are easier.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Instance;
use crate::rng::{self, derive_seed, unit_interval};
use crate::tagger::{DropoutMode, TaggerParams, TokenDistribution};
use crate::{Error, Result};

/// Floor applied to max probabilities before taking logs in MNLP.
pub const MNLP_MIN_PROB: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Random,
    Length,
    Tlc,
    Mnlp,
    Bu,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Random,
        MetricKind::Length,
        MetricKind::Tlc,
        MetricKind::Mnlp,
        MetricKind::Bu,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Random => "random",
            MetricKind::Length => "length",
            MetricKind::Tlc => "tlc",
            MetricKind::Mnlp => "mnlp",
            MetricKind::Bu => "bu",
        }
    }

    pub fn model_dependent(self) -> bool {
        matches!(self, MetricKind::Tlc | MetricKind::Mnlp | MetricKind::Bu)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}` (expected random, length, tlc, mnlp or bu)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub kind: MetricKind,
    /// Tokens averaged by TLC.
    pub top_n: usize,
    /// Monte-Carlo dropout passes for BU.
    pub mc_passes: usize,
    pub seed: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            kind: MetricKind::Bu,
            top_n: 5,
            mc_passes: 3,
            seed: 0,
        }
    }
}

impl MetricConfig {
    pub fn new(kind: MetricKind) -> Self {
        MetricConfig {
            kind,
            ..MetricConfig::default()
        }
    }

    pub fn model_dependent(&self) -> bool {
        self.kind.model_dependent()
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_n < 1 {
            return Err(Error::Config("TLC top_n must be >= 1".into()));
        }
        if self.mc_passes < 2 {
            return Err(Error::Config("BU mc_passes must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyScore {
    pub sentence_id: usize,
    pub score: f64,
    pub metric: MetricKind,
}

/// Least confidence of one token.
pub fn lc_token(dist: &TokenDistribution) -> f64 {
    1.0 - dist.max_prob()
}

/// Mean of the `n` largest token least-confidence values (all tokens when
/// the sentence is shorter than `n`). Equal values keep token order.
pub fn score_tlc(dists: &[TokenDistribution], n: usize) -> f64 {
    if dists.is_empty() {
        return 0.0;
    }
    let mut lc: Vec<(usize, f64)> = dists.iter().map(lc_token).enumerate().collect();
    lc.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let take = n.min(lc.len()).max(1);
    lc[..take].iter().map(|&(_, v)| v).sum::<f64>() / take as f64
}

/// MNLP together with the number of max probabilities that had to be clamped.
pub fn score_mnlp_counted(dists: &[TokenDistribution]) -> (f64, usize) {
    if dists.is_empty() {
        return (0.0, 0);
    }
    let mut clamped = 0;
    let sum: f64 = dists
        .iter()
        .map(|d| {
            let p = d.max_prob();
            if p < MNLP_MIN_PROB {
                clamped += 1;
                MNLP_MIN_PROB.ln()
            } else {
                p.ln()
            }
        })
        .sum();
    // -0.0 when every token is certain
    ((-sum / dists.len() as f64).max(0.0), clamped)
}

pub fn score_mnlp(dists: &[TokenDistribution]) -> f64 {
    score_mnlp_counted(dists).0
}

/// Per-token predictive variance summed over labels, from `K` recorded passes.
/// `passes[k][i]` is the distribution of token `i` in pass `k`.
pub fn token_variances(passes: &[Vec<TokenDistribution>]) -> Vec<f64> {
    let k = passes.len() as f64;
    let Some(first) = passes.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|i| {
            let labels = first[i].probs.len();
            (0..labels)
                .map(|y| {
                    // E[P²] - E[P]², shifted by the first pass so identical
                    // passes give exactly zero.
                    let shift = first[i].probs[y];
                    let (mut sum, mut sq) = (0.0, 0.0);
                    for pass in passes {
                        let d = pass[i].probs[y] - shift;
                        sum += d;
                        sq += d * d;
                    }
                    let mean = sum / k;
                    (sq / k - mean * mean).max(0.0)
                })
                .sum::<f64>()
        })
        .collect()
}

/// BU score from recorded passes: max token variance plus mean token variance.
pub fn bu_from_passes(passes: &[Vec<TokenDistribution>]) -> f64 {
    let vars = token_variances(passes);
    if vars.is_empty() {
        return 0.0;
    }
    let max = vars.iter().copied().fold(0.0, f64::max);
    let mean = vars.iter().sum::<f64>() / vars.len() as f64;
    max + mean
}

/// Runs `passes` dropout-on forward passes, pass `k` seeded from `(seed, k)`.
pub fn mc_dropout_passes(
    params: &TaggerParams,
    token_ids: &[u32],
    passes: usize,
    dropout_rate: f64,
    seed: u64,
) -> Result<Vec<Vec<TokenDistribution>>> {
    (0..passes)
        .map(|k| {
            let mut rng = rng::stream(seed, &[rng::tag::MC_PASS, k as u64]);
            params.forward(
                token_ids,
                DropoutMode::On {
                    rate: dropout_rate,
                    rng: &mut rng,
                },
            )
        })
        .collect()
}

pub fn score_bu(params: &TaggerParams, token_ids: &[u32], passes: usize, dropout_rate: f64, seed: u64) -> Result<f64> {
    Ok(bu_from_passes(&mc_dropout_passes(params, token_ids, passes, dropout_rate, seed)?))
}

pub fn score_length(sentence: &Instance) -> f64 {
    sentence.len() as f64
}

/// Fixed pseudo-random score in `[0, 1)` for `(sentence_id, seed)`.
pub fn score_random(sentence_id: usize, seed: u64) -> f64 {
    unit_interval(derive_seed(seed, &[rng::tag::RANDOM_METRIC, sentence_id as u64]))
}

/// Seed of the BU passes for one sentence in one scoring round.
pub fn bu_sentence_seed(metric_seed: u64, round: u64, sentence_id: usize) -> u64 {
    derive_seed(metric_seed, &[rng::tag::SCORING, round, sentence_id as u64])
}

/// Scores one sentence. `round` distinguishes successive re-scorings in a run.
pub fn score_sentence(
    params: Option<&TaggerParams>,
    sentence: &Instance,
    metric: &MetricConfig,
    dropout_rate: f64,
    round: u64,
) -> Result<f64> {
    let need = || Error::Config(format!("the {} metric needs a trained tagger", metric.kind));
    Ok(match metric.kind {
        MetricKind::Random => score_random(sentence.id, metric.seed),
        MetricKind::Length => score_length(sentence),
        MetricKind::Tlc => {
            let dists = params.ok_or_else(need)?.forward(&sentence.token_ids, DropoutMode::Off)?;
            score_tlc(&dists, metric.top_n)
        }
        MetricKind::Mnlp => {
            let dists = params.ok_or_else(need)?.forward(&sentence.token_ids, DropoutMode::Off)?;
            let (score, clamped) = score_mnlp_counted(&dists);
            if clamped > 0 {
                log::warn!("sentence {}: clamped {clamped} zero max-probabilities in MNLP", sentence.id);
            }
            score
        }
        MetricKind::Bu => score_bu(
            params.ok_or_else(need)?,
            &sentence.token_ids,
            metric.mc_passes,
            dropout_rate,
            bu_sentence_seed(metric.seed, round, sentence.id),
        )?,
    })
}

/// Scores every sentence, in input order. Never mutates `params`.
pub fn score_dataset(
    params: Option<&TaggerParams>,
    sentences: &[&Instance],
    metric: &MetricConfig,
    dropout_rate: f64,
    round: u64,
) -> Result<Vec<DifficultyScore>> {
    sentences
        .iter()
        .map(|s| {
            Ok(DifficultyScore {
                sentence_id: s.id,
                score: score_sentence(params, s, metric, dropout_rate, round)?,
                metric: metric.kind,
            })
        })
        .collect()
}

/// Parallel [`score_dataset`]; identical output because every sentence owns
/// its random streams.
#[cfg(feature = "parallel")]
pub fn score_dataset_parallel(
    params: Option<&TaggerParams>,
    sentences: &[&Instance],
    metric: &MetricConfig,
    dropout_rate: f64,
    round: u64,
) -> Result<Vec<DifficultyScore>> {
    use rayon::prelude::*;
    sentences
        .par_iter()
        .map(|s| {
            Ok(DifficultyScore {
                sentence_id: s.id,
                score: score_sentence(params, s, metric, dropout_rate, round)?,
                metric: metric.kind,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: &[f64]) -> TokenDistribution {
        TokenDistribution::new(p.to_vec())
    }

    /// Distributions whose max probability is `1 - lc` over four labels.
    fn from_lc(lcs: &[f64]) -> Vec<TokenDistribution> {
        lcs.iter()
            .map(|&lc| {
                let rest = lc / 3.0;
                d(&[1.0 - lc, rest, rest, rest])
            })
            .collect()
    }

    #[test]
    fn least_confidence_values() {
        assert!((lc_token(&d(&[0.25; 4])) - 0.75).abs() < 1e-15);
        assert_eq!(lc_token(&d(&[0.0, 1.0, 0.0, 0.0])), 0.0);
        assert!((lc_token(&d(&[0.7, 0.1, 0.1, 0.1])) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tlc_examples() {
        let s = score_tlc(&from_lc(&[0.1, 0.5, 0.2, 0.4, 0.3, 0.05]), 5);
        assert!((s - 0.30).abs() < 1e-12);
        assert_eq!(score_tlc(&[d(&[1.0, 0.0]), d(&[0.0, 1.0])], 5), 0.0);
        let s = score_tlc(&from_lc(&[0.1, 0.2, 0.3]), 5);
        assert!((s - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mnlp_examples() {
        assert_eq!(score_mnlp(&[d(&[1.0, 0.0]), d(&[0.0, 1.0])]), 0.0);
        let s = score_mnlp(&[d(&[0.5, 0.5]), d(&[0.25; 4])]);
        assert!((s - 1.039721).abs() < 1e-6);
        let dup = [d(&[0.5, 0.5]), d(&[0.25; 4]), d(&[0.5, 0.5]), d(&[0.25; 4])];
        assert!((score_mnlp(&dup) - s).abs() < 1e-15);
    }

    #[test]
    fn mnlp_clamps_zero_probabilities() {
        let (s, clamped) = score_mnlp_counted(&[d(&[0.0, 0.0])]);
        assert_eq!(clamped, 1);
        assert!((s - (-MNLP_MIN_PROB.ln())).abs() < 1e-12);
    }

    #[test]
    fn bu_one_token_example() {
        let passes = vec![vec![d(&[0.6, 0.4])], vec![d(&[0.8, 0.2])]];
        assert!((token_variances(&passes)[0] - 0.02).abs() < 1e-12);
        assert!((bu_from_passes(&passes) - 0.04).abs() < 1e-12);
    }

    #[test]
    fn bu_identical_passes_is_zero() {
        let passes = vec![vec![d(&[0.3, 0.7]), d(&[0.9, 0.1])]; 3];
        assert!(bu_from_passes(&passes).abs() < 1e-15);
    }

    #[test]
    fn length_and_random() {
        let s = Instance {
            id: 4,
            token_ids: vec![2, 3, 4],
            labels: vec![0, 1, 2],
        };
        assert_eq!(score_length(&s), 3.0);
        let r = score_random(4, 9);
        assert_eq!(r, score_random(4, 9));
        assert!((0.0..1.0).contains(&r));
        assert_ne!(r, score_random(4, 10));
    }

    #[test]
    fn model_metrics_need_params() {
        let s = Instance {
            id: 0,
            token_ids: vec![2],
            labels: vec![0],
        };
        let err = score_dataset(None, &[&s], &MetricConfig::new(MetricKind::Tlc), 0.1, 0);
        assert!(matches!(err, Err(Error::Config(_))));
        let ok = score_dataset(None, &[&s], &MetricConfig::new(MetricKind::Length), 0.1, 0).unwrap();
        assert_eq!(ok[0].score, 1.0);
    }

    #[test]
    fn parse_kind() {
        for k in MetricKind::ALL {
            assert_eq!(k.as_str().parse::<MetricKind>().unwrap(), k);
        }
        assert!("loss".parse::<MetricKind>().is_err());
        assert!(MetricConfig { mc_passes: 1, ..MetricConfig::default() }.validate().is_err());
    }
}
