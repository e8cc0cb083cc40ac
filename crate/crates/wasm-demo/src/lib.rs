//! WebAssembly bindings behind `www/index.html`.
//!
//! Each exported function takes plain numbers or a JSON string and returns
//! JSON. The `*_json` functions hold the logic and also run natively, which
//! is how the tests exercise them.

use serde::{Deserialize, Serialize};
use tcl::corpus::{generate_synthetic, SynthConfig};
use tcl::curriculum::{run_baseline, run_tcl, RunConfig};
use tcl::difficulty::{bu_from_passes, lc_token, score_mnlp, score_tlc, token_variances, MetricKind};
use tcl::scheduler::{lambda_at, target_size, ScheduleConfig};
use tcl::tagger::{TaggerConfig, TokenDistribution};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize, PartialEq)]
pub struct PacingPoint {
    pub epoch: usize,
    pub lambda: f64,
    pub selected: usize,
}

/// Pacing value and admitted sentence count for epochs `0..=epochs`.
pub fn pacing_curve_json(lambda0: f64, e_grow: usize, epochs: usize, corpus_size: usize) -> Result<String, String> {
    let cfg = ScheduleConfig { lambda0, e_grow };
    cfg.validate().map_err(|e| e.to_string())?;
    if corpus_size == 0 {
        return Err("corpus size must be at least 1".into());
    }
    let points: Vec<PacingPoint> = (0..=epochs)
        .map(|epoch| PacingPoint {
            epoch,
            lambda: lambda_at(&cfg, epoch),
            selected: target_size(&cfg, epoch, corpus_size),
        })
        .collect();
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
struct MetricInput {
    /// `passes[k][i]` is the label distribution of token `i` in pass `k`.
    passes: Vec<Vec<Vec<f64>>>,
    #[serde(default = "default_top_n")]
    top_n: usize,
}

fn default_top_n() -> usize {
    5
}

#[derive(Debug, Serialize)]
pub struct MetricOutput {
    pub lc: Vec<f64>,
    pub tlc: f64,
    pub mnlp: f64,
    /// Present only with two or more passes.
    pub token_variances: Option<Vec<f64>>,
    pub bu: Option<f64>,
}

/// Difficulty metrics of one sentence. LC, TLC and MNLP use the first pass;
/// BU needs at least two.
pub fn metric_scores_json(input: &str) -> Result<String, String> {
    let input: MetricInput = serde_json::from_str(input).map_err(|e| format!("invalid input: {e}"))?;
    if input.top_n == 0 {
        return Err("top_n must be at least 1".into());
    }
    let Some(first) = input.passes.first() else {
        return Err("give at least one pass".into());
    };
    if first.is_empty() {
        return Err("a pass needs at least one token".into());
    }
    let labels = first[0].len();
    let mut passes = Vec::with_capacity(input.passes.len());
    for (k, pass) in input.passes.iter().enumerate() {
        if pass.len() != first.len() {
            return Err(format!("pass {k} has {} tokens, pass 0 has {}", pass.len(), first.len()));
        }
        let mut dists = Vec::with_capacity(pass.len());
        for (i, probs) in pass.iter().enumerate() {
            if probs.len() != labels || labels == 0 {
                return Err(format!("pass {k} token {i}: every distribution needs {labels} labels"));
            }
            let sum: f64 = probs.iter().sum();
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-6 {
                return Err(format!("pass {k} token {i}: probabilities must lie in [0, 1] and sum to 1"));
            }
            dists.push(TokenDistribution::new(probs.clone()));
        }
        passes.push(dists);
    }
    let base = &passes[0];
    let multi = passes.len() >= 2;
    let out = MetricOutput {
        lc: base.iter().map(lc_token).collect(),
        tlc: score_tlc(base, input.top_n),
        mnlp: score_mnlp(base),
        token_variances: multi.then(|| token_variances(&passes)),
        bu: multi.then(|| bu_from_passes(&passes)),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub selected: usize,
    pub visits: u64,
    pub dev_f1: f64,
}

#[derive(Debug, Serialize)]
pub struct Arm {
    pub name: String,
    pub best_dev_f1: f64,
    pub total_visits: u64,
    pub curve: Vec<CurvePoint>,
}

/// Corpus and model small enough to train in a browser tab in a few seconds.
fn tiny_setup(seed: u64, metric: MetricKind) -> (SynthConfig, RunConfig) {
    let synth = SynthConfig {
        vocab_a: 80,
        vocab_b: 80,
        chars_per_domain: 60,
        train_size: 300,
        dev_size: 80,
        test_size: 20,
        population: 500,
        ..SynthConfig::default()
    };
    let mut run = RunConfig {
        e0: 2,
        es: 12,
        schedule: ScheduleConfig {
            lambda0: 0.3,
            e_grow: 6,
        },
        tagger: TaggerConfig {
            embed_dim: 16,
            hidden_dim: 32,
            batch_size: 8,
            ..TaggerConfig::default()
        },
        ..RunConfig::default()
    }
    .with_seed(seed);
    run.metric.kind = metric;
    (synth, run)
}

/// Baseline and curriculum runs on a tiny synthetic corpus, both seeded by `seed`.
pub fn tiny_run_json(seed: u64, metric: &str, lambda0: f64, e_grow: usize) -> Result<String, String> {
    let metric: MetricKind = metric.parse().map_err(|e: tcl::Error| e.to_string())?;
    let (synth, mut run) = tiny_setup(seed, metric);
    run.schedule = ScheduleConfig { lambda0, e_grow };
    let corpus = generate_synthetic(&synth, seed).map_err(|e| e.to_string())?;
    let mut arms = Vec::new();
    for (name, outcome) in [
        ("baseline".to_string(), run_baseline(&corpus.train, &corpus.dev, &run)),
        (format!("tcl-{metric}"), run_tcl(&corpus.train, &corpus.dev, &run)),
    ] {
        let outcome = outcome.map_err(|e| e.to_string())?;
        let summary = outcome.log.summary().ok_or("run log has no summary")?;
        arms.push(Arm {
            name,
            best_dev_f1: summary.best_dev_f1,
            total_visits: summary.total_visits,
            curve: outcome
                .log
                .epochs()
                .map(|r| CurvePoint {
                    epoch: r.epoch,
                    selected: r.selected_size,
                    visits: r.cumulative_sentence_visits,
                    dev_f1: r.dev_f1_cws,
                })
                .collect(),
        });
    }
    serde_json::to_string(&arms).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = pacingCurve)]
pub fn pacing_curve(lambda0: f64, e_grow: usize, epochs: usize, corpus_size: usize) -> Result<String, JsError> {
    pacing_curve_json(lambda0, e_grow, epochs, corpus_size).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = metricScores)]
pub fn metric_scores(input: &str) -> Result<String, JsError> {
    metric_scores_json(input).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = tinyRun)]
pub fn tiny_run(seed: u64, metric: &str, lambda0: f64, e_grow: usize) -> Result<String, JsError> {
    tiny_run_json(seed, metric, lambda0, e_grow).map_err(|e| JsError::new(&e))
}
