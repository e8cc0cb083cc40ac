//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcl::corpus::{Bmes, Instance};
use tcl::rng::TclRng;
use tcl::tagger::{DropoutMode, TaggerConfig, TaggerParams, TokenDistribution};

pub fn max_prob(d: &TokenDistribution) -> f64 {
    d.probs.iter().cloned().fold(0.0, f64::max)
}

pub fn oracle_tlc(dists: &[TokenDistribution], n: usize) -> f64 {
    let mut lcs: Vec<f64> = dists.iter().map(|d| 1.0 - max_prob(d)).collect();
    lcs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = n.min(lcs.len());
    lcs.iter().take(k).sum::<f64>() / k as f64
}

pub fn oracle_mnlp(dists: &[TokenDistribution]) -> f64 {
    let total: f64 = dists.iter().map(|d| max_prob(d).max(1e-12).ln()).sum();
    -total / dists.len() as f64
}

/// BU from recorded passes with the variance written as `E[P²] - E[P]²`.
pub fn oracle_bu(passes: &[Vec<TokenDistribution>]) -> f64 {
    let k = passes.len() as f64;
    let m = passes[0].len();
    let t = passes[0][0].probs.len();
    let mut vars = Vec::with_capacity(m);
    for i in 0..m {
        let mut v = 0.0;
        for y in 0..t {
            let mean_sq = passes.iter().map(|p| p[i].probs[y] * p[i].probs[y]).sum::<f64>() / k;
            let mean = passes.iter().map(|p| p[i].probs[y]).sum::<f64>() / k;
            v += mean_sq - mean * mean;
        }
        vars.push(v);
    }
    let max = vars.iter().cloned().fold(f64::MIN, f64::max);
    max + vars.iter().sum::<f64>() / m as f64
}

pub fn random_dist(rng: &mut impl Rng, labels: usize) -> TokenDistribution {
    let raw: Vec<f64> = (0..labels).map(|_| rng.gen::<f64>().powi(3) + 1e-9).collect();
    let sum: f64 = raw.iter().sum();
    TokenDistribution::new(raw.into_iter().map(|x| x / sum).collect())
}

/// Word boundaries from local rules alone: a word starts at `i` when `i` is
/// the first token, the tag at `i` is B or S, or the tag before it is E or S.
pub fn reference_bounds(tags: &[Bmes]) -> Vec<(usize, usize)> {
    let starts: Vec<usize> = (0..tags.len())
        .filter(|&i| i == 0 || matches!(tags[i], Bmes::B | Bmes::S) || matches!(tags[i - 1], Bmes::E | Bmes::S))
        .collect();
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, starts.get(k + 1).copied().unwrap_or(tags.len())))
        .collect()
}

/// Every label-id sequence of length `n` over four labels.
pub fn all_sequences(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..4usize.pow(n as u32)).map(move |mut code| {
        (0..n)
            .map(|_| {
                let d = code % 4;
                code /= 4;
                d
            })
            .collect()
    })
}

/// Exact `max(1, floor(λ·n))` for λ₀ = 3/10: the largest m with
/// `m² · 100·E ≤ n² · (9·E + 91·e)`.
pub fn exact_target(epoch: usize, e_grow: usize, n: usize) -> usize {
    if epoch >= e_grow {
        return n;
    }
    let (n, e, g) = (n as u128, epoch as u128, e_grow as u128);
    let rhs = n * n * (9 * g + 91 * e);
    let mut m = ((rhs as f64 / (100 * g) as f64).sqrt()) as u128 + 2;
    while m * m * 100 * g > rhs {
        m -= 1;
    }
    (m as usize).max(1)
}

pub fn random_instance(rng: &mut ChaCha8Rng, id: usize, vocab: usize, labels: usize, max_len: usize) -> Instance {
    let len = rng.gen_range(1..=max_len);
    Instance {
        id,
        token_ids: (0..len).map(|_| rng.gen_range(0..vocab as u32)).collect(),
        labels: (0..len).map(|_| rng.gen_range(0..labels)).collect(),
    }
}

/// Largest relative error between analytic and central-difference gradients
/// (h = 1e-5) over `configs` random tiny models with dropout off.
pub fn gradient_check(configs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for trial in 0..configs {
        let cfg = TaggerConfig {
            embed_dim: rng.gen_range(1..=4),
            window: rng.gen_range(0..=2),
            hidden_dim: rng.gen_range(1..=5),
            ..TaggerConfig::default()
        };
        let vocab = rng.gen_range(2..=7);
        let labels = rng.gen_range(2..=5);
        let mut params = TaggerParams::init(&cfg, vocab, labels, &mut TclRng::seed_from_u64(trial as u64));
        // Larger weights than the default init exercise tanh curvature.
        for (_, t) in params.slices_mut() {
            for x in t.iter_mut() {
                *x *= 5.0;
            }
        }
        let batch: Vec<Instance> = (0..rng.gen_range(1..=3))
            .map(|i| random_instance(&mut rng, i, vocab, labels, 5))
            .collect();
        let refs: Vec<&Instance> = batch.iter().collect();
        let loss = |p: &TaggerParams| p.loss_and_gradients(&refs, DropoutMode::Off).unwrap().0;
        let (_, grads) = params.loss_and_gradients(&refs, DropoutMode::Off).unwrap();

        for t in 0..5 {
            for i in 0..params.slices()[t].1.len() {
                let orig = params.slices()[t].1[i];
                params.slices_mut()[t].1[i] = orig + h;
                let up = loss(&params);
                params.slices_mut()[t].1[i] = orig - h;
                let down = loss(&params);
                params.slices_mut()[t].1[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.slices()[t].1[i];
                let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    worst
}
