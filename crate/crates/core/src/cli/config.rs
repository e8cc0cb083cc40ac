//! Flat TOML run configuration.
//!
//! Every key is optional; missing keys fall back to library defaults.
//! Relative paths are resolved against the config file's directory.
//!
//! ```toml
//! seed = 1
//! e0 = 5
//! es = 50
//! lambda0 = 0.3
//! e_grow = 10
//! metric = "bu"        # random | length | tlc | mnlp | bu
//! top_n = 5
//! mc_passes = 3
//!
//! embed_dim = 32
//! window = 2
//! hidden_dim = 128
//! dropout_rate = 0.1
//! learning_rate = 0.1
//! batch_size = 32
//!
//! # corpus files; without `train`/`dev` a synthetic corpus is generated
//! scheme = "bmes"      # bmes | joint | generic
//! train = "data/train.tsv"
//! dev = "data/dev.tsv"
//! test = "data/test.tsv"
//! out_dir = "runs"
//!
//! # synthetic corpus
//! data_seed = 1
//! vocab_a = 400
//! vocab_b = 400
//! chars_per_domain = 300
//! word_len_probs = [0.3, 0.5, 0.2]
//! zipf_exponent = 1.0
//! pos_tags = 6
//! min_words = 3
//! max_words = 12
//! train_size = 4000
//! dev_size = 500
//! test_size = 500
//! population = 6000
//! noise_rate = 0.05
//! mix_ratio = 0.7
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::corpus::{Scheme, SynthConfig};
use crate::curriculum::RunConfig;
use crate::difficulty::MetricKind;

pub const SEED_ENV: &str = "TCL_SEED";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub e0: Option<usize>,
    pub es: Option<usize>,
    pub lambda0: Option<f64>,
    pub e_grow: Option<usize>,
    pub metric: Option<MetricKind>,
    pub top_n: Option<usize>,
    pub mc_passes: Option<usize>,

    pub embed_dim: Option<usize>,
    pub window: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub dropout_rate: Option<f64>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,

    pub scheme: Option<Scheme>,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,

    pub data_seed: Option<u64>,
    pub vocab_a: Option<usize>,
    pub vocab_b: Option<usize>,
    pub chars_per_domain: Option<usize>,
    pub word_len_probs: Option<[f64; 3]>,
    pub zipf_exponent: Option<f64>,
    pub pos_tags: Option<usize>,
    pub min_words: Option<usize>,
    pub max_words: Option<usize>,
    pub train_size: Option<usize>,
    pub dev_size: Option<usize>,
    pub test_size: Option<usize>,
    pub population: Option<usize>,
    pub noise_rate: Option<f64>,
    pub mix_ratio: Option<f64>,
}

macro_rules! apply {
    ($src:expr, $dst:expr, $($field:ident),+) => {
        $( if let Some(v) = $src.$field { $dst.$field = v; } )+
    };
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: CliConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut cfg.train, &mut cfg.dev, &mut cfg.test, &mut cfg.out_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        for p in [&cfg.train, &cfg.dev, &cfg.test].into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::Usage(format!("data file {} does not exist", p.display())));
            }
        }
        Ok(cfg)
    }

    /// Seed with precedence flag > `TCL_SEED` > config > default (0).
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(seed) = flag {
            return Ok(seed);
        }
        if let Ok(env) = std::env::var(SEED_ENV) {
            return env
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={env:?} is not an unsigned integer")));
        }
        Ok(self.seed.unwrap_or(0))
    }

    pub fn synth_config(&self) -> SynthConfig {
        let mut s = SynthConfig::default();
        apply!(
            self, s, scheme, vocab_a, vocab_b, chars_per_domain, word_len_probs, zipf_exponent, pos_tags,
            min_words, max_words, train_size, dev_size, test_size, population, noise_rate, mix_ratio
        );
        s
    }

    /// Run configuration before flag overrides; the seed is applied by the caller.
    pub fn run_config(&self) -> RunConfig {
        let mut r = RunConfig::default();
        apply!(self, r, e0, es);
        apply!(self, r.schedule, lambda0, e_grow);
        if let Some(kind) = self.metric {
            r.metric.kind = kind;
        }
        if let Some(n) = self.top_n {
            r.metric.top_n = n;
        }
        if let Some(k) = self.mc_passes {
            r.metric.mc_passes = k;
        }
        apply!(self, r.tagger, embed_dim, window, hidden_dim, dropout_rate, learning_rate, batch_size);
        r
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_map_onto_configs() {
        let cfg: CliConfig = toml::from_str(
            "lambda0 = 0.5\ne_grow = 4\nmetric = \"tlc\"\nhidden_dim = 7\nnoise_rate = 0.0\nscheme = \"joint\"",
        )
        .unwrap();
        let run = cfg.run_config();
        assert_eq!(run.schedule.lambda0, 0.5);
        assert_eq!(run.schedule.e_grow, 4);
        assert_eq!(run.metric.kind, MetricKind::Tlc);
        assert_eq!(run.tagger.hidden_dim, 7);
        assert_eq!(run.e0, 5);
        let synth = cfg.synth_config();
        assert_eq!(synth.noise_rate, 0.0);
        assert_eq!(synth.scheme, Scheme::Joint);
        assert_eq!(synth.train_size, 4000);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<CliConfig>("lamda0 = 0.5").is_err());
    }
}
