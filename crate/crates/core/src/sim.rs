//! Exact simulation of Galton-Watson trees conditioned on their size:
//! multinomial rejection on the total progeny, uniform shuffle of the child
//! counts, then the cycle-lemma rotation to a valid preorder sequence.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::offspring::OffspringDistribution;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::tree::{build_tree, OrderedTree};

/// Default cap on rejection rounds; the acceptance probability decays like
/// `n^(-1/2)` for admissible pairs, so the cap only fires on structurally
/// impossible `(dist, n)` combinations such as parity obstructions.
pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000;

fn binomial(rng: &mut Rng, n: u64, p: f64) -> u64 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    use rand::distributions::Distribution;
    rand_distr::Binomial::new(n, p).expect("valid binomial parameters").sample(rng)
}

/// One multinomial draw by sequential conditional binomials.
fn multinomial(rng: &mut Rng, n: usize, probs: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n as u64;
    let mut mass_left = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = remaining;
            break;
        }
        let cond = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let c = binomial(rng, remaining, cond);
        counts[k] = c;
        remaining -= c;
        mass_left -= p;
    }
    counts
}

/// Rotates a child-count sequence with total `n - 1` to the unique cyclic
/// shift satisfying the preorder prefix condition. The rotation point is the
/// first global minimum of the partial-sum walk (cycle lemma).
pub fn rotate_to_valid_preorder(counts: &[usize]) -> Vec<usize> {
    let n = counts.len();
    debug_assert_eq!(counts.iter().sum::<usize>(), n - 1);
    let mut best_k = n;
    let mut best = i64::MAX;
    let mut s = 0i64;
    for (i, &c) in counts.iter().enumerate() {
        s += c as i64 - 1;
        if s < best {
            best = s;
            best_k = i + 1;
        }
    }
    // best_k == n means the sequence is already valid
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&counts[best_k % n..]);
    out.extend_from_slice(&counts[..best_k % n]);
    out
}

/// Samples the preorder child-count sequence of a GW_n(mu) tree.
pub fn sample_conditioned_degree_sequence(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    sample_conditioned_degree_sequence_with_budget(dist, n, rng, DEFAULT_REJECTION_BUDGET)
}

pub fn sample_conditioned_degree_sequence_with_budget(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut Rng,
    budget: u64,
) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be at least 1".into()));
    }
    if !dist.is_critical() {
        return Err(Error::OutOfRange(format!(
            "offspring distribution must be critical, mean is {}",
            dist.mean()
        )));
    }
    let probs = dist.probs();
    let target = n as u64 - 1;
    for _ in 0..budget {
        let counts = multinomial(rng, n, probs);
        let progeny: u64 = counts.iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
        if progeny != target {
            continue;
        }
        // lay out the multiset and shuffle it uniformly (Fisher-Yates)
        let mut seq: Vec<usize> = Vec::with_capacity(n);
        for (k, &c) in counts.iter().enumerate() {
            seq.extend(std::iter::repeat(k).take(c as usize));
        }
        seq.shuffle(rng);
        return Ok(rotate_to_valid_preorder(&seq));
    }
    Err(Error::RejectionBudgetExceeded { n, budget })
}

/// Draws one GW_n(mu) tree.
pub fn simulate_tree(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut Rng,
) -> Result<OrderedTree> {
    let counts = sample_conditioned_degree_sequence(dist, n, rng)?;
    build_tree(&counts)
}

/// Draws an independent forest; the i-th tree uses a generator derived from
/// `(master_seed, i)` so the result does not depend on the worker count.
pub fn simulate_forest(
    dist: &OffspringDistribution,
    sizes: &[usize],
    master_seed: u64,
) -> Result<Forest> {
    let trees: Vec<(OrderedTree, u64)> = sizes
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let seed = derive_seed(master_seed, i as u64);
            let mut rng = rng_from_seed(seed);
            simulate_tree(dist, n, &mut rng).map(|t| (t, seed))
        })
        .collect::<Result<_>>()?;
    let (trees, seeds) = trees.into_iter().unzip();
    Ok(Forest::with_seeds(trees, seeds))
}
