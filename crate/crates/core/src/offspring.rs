//! Finitely supported offspring distributions.

use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-12;
const CRIT_TOL: f64 = 1e-6;

/// Probability law on `{0..K}` with criticality metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    probs: Vec<f64>,
}

impl OffspringDistribution {
    /// Builds a distribution from explicit probabilities `p_0..p_K`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::OutOfRange("empty probability vector".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::OutOfRange("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::OutOfRange(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(OffspringDistribution { probs })
    }

    /// Critical binary family: `p_0 = p_2 = sigma2 / 2`, `p_1 = 1 - sigma2`.
    pub fn binary(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2 <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "sigma2 must lie in (0, 1], got {sigma2}"
            )));
        }
        OffspringDistribution::new(vec![sigma2 / 2.0, 1.0 - sigma2, sigma2 / 2.0])
    }

    /// Geometric law with parameter 1/2 (`p_k` proportional to `2^-(k+1)`),
    /// truncated at the smallest `K` with tail mass below `tail_cutoff` and
    /// renormalized. Critical with variance close to 2.
    pub fn geometric(tail_cutoff: f64) -> Result<Self> {
        if !(tail_cutoff > 0.0 && tail_cutoff <= 1e-6) {
            return Err(Error::OutOfRange(format!(
                "tail_cutoff must lie in (0, 1e-6], got {tail_cutoff}"
            )));
        }
        // tail mass beyond K is exactly 2^-(K+1)
        let mut k_max = 0u32;
        while 0.5f64.powi(k_max as i32 + 1) >= tail_cutoff {
            k_max += 1;
        }
        let norm = 1.0 - 0.5f64.powi(k_max as i32 + 1);
        let probs: Vec<f64> = (0..=k_max)
            .map(|k| 0.5f64.powi(k as i32 + 1) / norm)
            .collect();
        OffspringDistribution::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Maximum offspring count `K`.
    pub fn max_offspring(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - m).powi(2) * p)
            .sum()
    }

    /// Mean within `1e-6` of 1.
    pub fn is_critical(&self) -> bool {
        (self.mean() - 1.0).abs() <= CRIT_TOL
    }

    /// Serializes to the key-value config format.
    pub fn to_config(&self) -> String {
        let probs = self
            .probs
            .iter()
            .map(|p| format!("{p:.17e}"))
            .collect::<Vec<_>>()
            .join(",");
        format!("kind = explicit\nprobs = {probs}\n")
    }

    /// Parses the key-value config format with keys `kind`, `sigma2`,
    /// `probs`, `tail_cutoff`.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut sigma2 = None;
        let mut probs = None;
        let mut tail_cutoff = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "kind" => kind = Some(value.to_string()),
                "sigma2" => {
                    sigma2 = Some(value.parse::<f64>().map_err(|e| {
                        Error::Parse(format!("bad sigma2 {value:?}: {e}"))
                    })?)
                }
                "tail_cutoff" => {
                    tail_cutoff = Some(value.parse::<f64>().map_err(|e| {
                        Error::Parse(format!("bad tail_cutoff {value:?}: {e}"))
                    })?)
                }
                "probs" => {
                    let v: Vec<f64> = value
                        .split(',')
                        .map(|t| {
                            t.trim()
                                .parse::<f64>()
                                .map_err(|e| Error::Parse(format!("bad prob {t:?}: {e}")))
                        })
                        .collect::<Result<_>>()?;
                    probs = Some(v);
                }
                _ => return Err(Error::Parse(format!("unknown key {key:?}"))),
            }
        }
        match kind.as_deref() {
            Some("binary") => {
                let s2 = sigma2.ok_or_else(|| Error::Parse("binary kind needs sigma2".into()))?;
                OffspringDistribution::binary(s2)
            }
            Some("geometric") => {
                OffspringDistribution::geometric(tail_cutoff.unwrap_or(1e-9))
            }
            Some("explicit") => {
                let p = probs.ok_or_else(|| Error::Parse("explicit kind needs probs".into()))?;
                OffspringDistribution::new(p)
            }
            Some(other) => Err(Error::Parse(format!("unknown kind {other:?}"))),
            None => Err(Error::Parse("missing kind".into())),
        }
    }
}
