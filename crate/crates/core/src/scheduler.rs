//! Root pacing function.
//!
//! The admitted fraction of the ranked corpus at epoch `e` is
//! `min(1, sqrt((1 - λ₀²) / E_grow · e + λ₀²))`, so `λ²` grows linearly from
//! `λ₀²` and reaches 1 at epoch `E_grow`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub lambda0: f64,
    pub e_grow: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            lambda0: 0.3,
            e_grow: 10,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0 <= 1.0) {
            return Err(Error::Config(format!("lambda0 must be in (0, 1], got {}", self.lambda0)));
        }
        if self.e_grow < 1 {
            return Err(Error::Config("e_grow must be >= 1".into()));
        }
        Ok(())
    }
}

/// Fraction of the corpus admitted at `epoch`.
pub fn lambda_at(cfg: &ScheduleConfig, epoch: usize) -> f64 {
    if epoch >= cfg.e_grow {
        return 1.0;
    }
    let l0 = cfg.lambda0 * cfg.lambda0;
    ((1.0 - l0) / cfg.e_grow as f64 * epoch as f64 + l0).sqrt().min(1.0)
}

/// Number of ranked sentences admitted at `epoch`: `floor(λ · |D|)`, at least 1.
pub fn target_size(cfg: &ScheduleConfig, epoch: usize, corpus_size: usize) -> usize {
    let lambda = lambda_at(cfg, epoch);
    if lambda >= 1.0 {
        return corpus_size;
    }
    // The epsilon absorbs products like 0.3 * 10 = 2.9999999999999996.
    let m = (lambda * corpus_size as f64 + 1e-9).floor() as usize;
    m.clamp(1, corpus_size.max(1))
}
