//! Persisted Monte Carlo quantile table of the limit variable, empirical
//! inverse CDF queries and the one-dimensional Wasserstein-2 distance.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::excursion::sample_lambda_infinity;
use crate::rng::{derive_seed, rng_from_seed};

pub const TABLE_FORMAT_VERSION: u32 = 1;

/// Sorted Monte Carlo sample providing the empirical inverse CDF and its
/// partial integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    sorted_samples: Vec<f64>,
    grid_size: usize,
    seed: u64,
}

impl QuantileTable {
    pub fn from_sorted(sorted_samples: Vec<f64>, grid_size: usize, seed: u64) -> Result<Self> {
        if sorted_samples.is_empty() {
            return Err(Error::InvalidTable("empty sample".into()));
        }
        if sorted_samples.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidTable("samples not sorted".into()));
        }
        Ok(QuantileTable { sorted_samples, grid_size, seed })
    }

    pub fn len(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Identifier embedded in estimate reports: `M-m-seed`.
    pub fn id(&self) -> String {
        format!("{}-{}-{}", self.len(), self.grid_size, self.seed)
    }

    pub fn mean(&self) -> f64 {
        self.sorted_samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.sorted_samples
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / self.len() as f64
    }

    /// Empirical second moment, `||F^-1||_2^2`.
    pub fn second_moment(&self) -> f64 {
        self.sorted_samples.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }

    /// Right-continuous empirical quantile: the value at rank `ceil(u M)`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfRange(format!("u must lie in (0, 1), got {u}")));
        }
        let m = self.len() as f64;
        let rank = (u * m).ceil() as usize;
        Ok(self.sorted_samples[rank.clamp(1, self.len()) - 1])
    }

    /// Exact integral of the empirical step quantile function over `[a, b]`.
    ///
    /// Rank r covers the mass interval ((r-1)/M, r/M]; whole ranks contribute
    /// `value / M` and boundary ranks contribute their overlap fraction.
    pub fn integral_inverse_cdf(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::OutOfRange(format!(
                "need 0 <= a <= b <= 1, got a = {a}, b = {b}"
            )));
        }
        let m = self.len() as f64;
        let lo = a * m;
        let hi = b * m;
        let first = lo.floor() as usize; // rank first+1 is the first touched
        let last = (hi.ceil() as usize).min(self.len());
        let mut acc = 0.0;
        for r in first..last {
            let seg_lo = (r as f64).max(lo);
            let seg_hi = ((r + 1) as f64).min(hi);
            if seg_hi > seg_lo {
                acc += self.sorted_samples[r] * (seg_hi - seg_lo);
            }
        }
        Ok(acc / m)
    }

    /// Writes the table file: header lines `version`, `M`, `m`, `seed`, then
    /// one ascending sample per line with 17 significant digits.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.len() * 26 + 64);
        out.push_str(&format!("version {TABLE_FORMAT_VERSION}\n"));
        out.push_str(&format!("M {}\n", self.len()));
        out.push_str(&format!("m {}\n", self.grid_size));
        out.push_str(&format!("seed {}\n", self.seed));
        for v in &self.sorted_samples {
            out.push_str(&format!("{v:.16e}\n"));
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let mut header = |name: &str| -> Result<u64> {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidTable(format!("missing header {name}")))?;
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::InvalidTable(format!("bad header line {line:?}")))?;
            if key != name {
                return Err(Error::InvalidTable(format!("expected header {name}, got {key}")));
            }
            value
                .parse::<u64>()
                .map_err(|e| Error::InvalidTable(format!("bad {name}: {e}")))
        };
        let version = header("version")?;
        if version != TABLE_FORMAT_VERSION as u64 {
            return Err(Error::InvalidTable(format!("unsupported version {version}")));
        }
        let m_samples = header("M")? as usize;
        let grid_size = header("m")? as usize;
        let seed = header("seed")?;
        let samples: Vec<f64> = lines
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidTable(format!("bad sample {l:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if samples.len() != m_samples {
            return Err(Error::InvalidTable(format!(
                "header says {m_samples} samples, file has {}",
                samples.len()
            )));
        }
        QuantileTable::from_sorted(samples, grid_size, seed)
    }
}

/// Builds a table of `m_samples` draws on an `excursion_grid`-step grid.
/// Sample i uses a generator derived from `(seed, i)`, so the table is
/// reproducible for any worker count.
pub fn build_quantile_table(
    m_samples: usize,
    excursion_grid: usize,
    seed: u64,
) -> Result<QuantileTable> {
    if m_samples < 1000 {
        return Err(Error::OutOfRange(format!(
            "at least 1000 samples required, got {m_samples}"
        )));
    }
    let mut samples: Vec<f64> = (0..m_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            sample_lambda_infinity(excursion_grid, &mut rng)
        })
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in table"));
    QuantileTable::from_sorted(samples, excursion_grid, seed)
}

/// Wasserstein-2 distance between two samples, computed exactly on the
/// common refinement of their rank breakpoints.
pub fn wasserstein2(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("no NaN"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("no NaN"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut acc = 0.0;
    let mut pos = 0.0; // current position in [0, 1]
    let (mut i, mut j) = (0usize, 0usize);
    while pos < 1.0 {
        let next_a = (i + 1) as f64 / na;
        let next_b = (j + 1) as f64 / nb;
        let next = next_a.min(next_b).min(1.0);
        let diff = a[i] - b[j];
        acc += diff * diff * (next - pos);
        pos = next;
        if (next_a - next).abs() < 1e-15 && i + 1 < a.len() {
            i += 1;
        }
        if (next_b - next).abs() < 1e-15 && j + 1 < b.len() {
            j += 1;
        }
    }
    Ok(acc.sqrt())
}
