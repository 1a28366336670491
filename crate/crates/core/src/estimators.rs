//! Per-tree and forest-level scale estimators: least squares against the
//! mean excursion profile, Wasserstein-quantile alignment, the uniform-node
//! competitor, and the finite-size bias corrector.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::excursion::{mean_excursion, E_NORM_SQ};
use crate::forest::Forest;
use crate::offspring::OffspringDistribution;
use crate::quantile::QuantileTable;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::sim::simulate_tree;
use crate::tree::{harris_walk, HarrisPath, OrderedTree};

/// Per-tree scale estimate: trapezoid quadrature of the rescaled Harris path
/// against the mean excursion at the 2n + 1 path breakpoints, divided by
/// `2 sqrt(n) ||E||_2^2`.
pub fn lambda_hat(path: &HarrisPath) -> f64 {
    let n = path.n();
    let walk = path.walk();
    let two_n = 2 * n;
    let h = 1.0 / two_n as f64;
    let mut acc = 0.0;
    for k in 1..two_n {
        let t = k as f64 * h;
        acc += walk[k] as f64 * mean_excursion(t).expect("breakpoint in [0, 1]");
    }
    // endpoints vanish: walk[0] = walk[2n] = 0
    acc * h / (2.0 * (n as f64).sqrt() * E_NORM_SQ)
}

pub fn lambda_hat_tree(tree: &OrderedTree) -> f64 {
    lambda_hat(&harris_walk(tree))
}

/// Forest least-squares estimate: the average of the per-tree values.
pub fn lambda_ls(per_tree: &[f64]) -> Result<f64> {
    if per_tree.is_empty() {
        return Err(Error::EmptyForest);
    }
    Ok(per_tree.iter().sum::<f64>() / per_tree.len() as f64)
}

/// Forest Wasserstein estimate: order-statistic weights from the table's
/// empirical inverse CDF, normalized by its second moment.
pub fn lambda_wasserstein(per_tree: &[f64], table: &QuantileTable) -> Result<f64> {
    if per_tree.is_empty() {
        return Err(Error::EmptyForest);
    }
    let n = per_tree.len();
    let mut sorted = per_tree.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let mut acc = 0.0;
    for (i, lambda) in sorted.iter().enumerate() {
        let block = table.integral_inverse_cdf(i as f64 / n as f64, (i + 1) as f64 / n as f64)?;
        acc += lambda * block;
    }
    Ok(acc / table.second_moment())
}

/// Empirical mean of child counts; deterministically `1 - 1/n`.
pub fn empirical_mean(tree: &OrderedTree) -> f64 {
    let n = tree.len() as f64;
    (n - 1.0) / n
}

/// Empirical variance of child counts in depth-first order.
pub fn empirical_variance(tree: &OrderedTree) -> f64 {
    let n = tree.len() as f64;
    let m = empirical_mean(tree);
    tree.preorder_child_counts()
        .iter()
        .map(|&c| (c as f64 - m).powi(2))
        .sum::<f64>()
        / n
}

/// Uniform-node estimate: `sqrt(2/pi) h(v) / sqrt(n)` for a node `v` drawn
/// uniformly over all n nodes, root included.
pub fn uniform_node_estimate(tree: &OrderedTree, rng: &mut Rng) -> f64 {
    let n = tree.len();
    let v = rng.gen_range(0..n);
    let heights = tree.heights();
    (2.0 / std::f64::consts::PI).sqrt() * heights[v] as f64 / (n as f64).sqrt()
}

/// Forest uniform-node estimate: mean of per-tree draws.
pub fn lambda_un(forest: &Forest, rng: &mut Rng) -> Result<f64> {
    if forest.is_empty() {
        return Err(Error::EmptyForest);
    }
    let sum: f64 = forest
        .trees()
        .iter()
        .map(|t| uniform_node_estimate(t, rng))
        .sum();
    Ok(sum / forest.len() as f64)
}

/// Multiplicative finite-size correction `eta(n) = 1 - 1/(a sqrt(n) + b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasCorrector {
    pub a: f64,
    pub b: f64,
}

impl BiasCorrector {
    /// Coefficients fitted in the reference simulation study.
    pub fn reference() -> Self {
        BiasCorrector { a: 0.504273, b: 0.9754839 }
    }

    /// Identity correction (`eta` pinned to 1).
    pub fn identity() -> Self {
        BiasCorrector { a: f64::INFINITY, b: 0.0 }
    }

    pub fn eta(&self, n: usize) -> f64 {
        if self.a.is_infinite() {
            return 1.0;
        }
        1.0 - 1.0 / (self.a * (n as f64).sqrt() + self.b)
    }

    pub fn to_config(&self) -> String {
        format!("a = {:.17e}\nb = {:.17e}\n", self.a, self.b)
    }

    pub fn from_config(text: &str) -> Result<Self> {
        let mut a = None;
        let mut b = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `key = value`, got {line:?}")))?;
            let parsed = value
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad {key}: {e}")))?;
            match key.trim() {
                "a" => a = Some(parsed),
                "b" => b = Some(parsed),
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        match (a, b) {
            (Some(a), Some(b)) => Ok(BiasCorrector { a, b }),
            _ => Err(Error::Parse("corrector file needs both a and b".into())),
        }
    }
}

/// One measured bias point: tree size n and the observed correction factor
/// `eta = sigma^-1 / mean(lambda_hat)`.
#[derive(Debug, Clone, Copy)]
pub struct BiasPoint {
    pub n: usize,
    pub sigma: f64,
    pub eta: f64,
}

/// Least-squares fit of `1 / (1 - eta) = a sqrt(n) + b` (exact
/// linearization of the corrector form).
pub fn fit_corrector_from_points(points: &[BiasPoint], min_sigma: f64) -> Result<BiasCorrector> {
    let usable: Vec<&BiasPoint> = points.iter().filter(|p| p.sigma >= min_sigma).collect();
    if usable.len() < 2 {
        return Err(Error::DegenerateFit("fewer than two usable points".into()));
    }
    let first_n = usable[0].n;
    if usable.iter().all(|p| p.n == first_n) {
        return Err(Error::DegenerateFit("all sizes equal".into()));
    }
    let m = usable.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for p in &usable {
        let x = (p.n as f64).sqrt();
        let y = 1.0 / (1.0 - p.eta);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateFit("singular design".into()));
    }
    let a = (m * sxy - sx * sy) / denom;
    let b = (sy - a * sx) / m;
    Ok(BiasCorrector { a, b })
}

/// Measures bias points by simulation: for every `(dist, n)` cell, the mean
/// of `lambda_hat` over `replicates` trees drawn with derived seeds.
pub fn measure_bias_points(
    dists: &[OffspringDistribution],
    sizes: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<BiasPoint>> {
    let mut points = Vec::new();
    let mut cell = 0u64;
    for dist in dists {
        let sigma = dist.variance().sqrt();
        for &n in sizes {
            let mut sum = 0.0;
            for r in 0..replicates {
                let mut rng = rng_from_seed(derive_seed(seed, cell * 1_000_003 + r as u64));
                let tree = simulate_tree(dist, n, &mut rng)?;
                sum += lambda_hat_tree(&tree);
            }
            let mean = sum / replicates as f64;
            points.push(BiasPoint { n, sigma, eta: (1.0 / sigma) / mean });
            cell += 1;
        }
    }
    Ok(points)
}

/// Fits the corrector over a family of distributions and sizes; points with
/// `sigma < min_sigma` are dropped from the regression.
pub fn fit_bias_corrector(
    dists: &[OffspringDistribution],
    sizes: &[usize],
    replicates: usize,
    seed: u64,
    min_sigma: f64,
) -> Result<BiasCorrector> {
    if replicates < 100 {
        return Err(Error::OutOfRange("at least 100 replicates required".into()));
    }
    if sizes.len() < 3 {
        return Err(Error::OutOfRange("at least 3 sizes required".into()));
    }
    let points = measure_bias_points(dists, sizes, replicates, seed)?;
    fit_corrector_from_points(&points, min_sigma)
}

/// Raw and corrected forest estimates with full provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub per_tree: Vec<(usize, f64)>, // (size, lambda_hat)
    pub raw_ls: f64,
    pub raw_w: Option<f64>,
    pub raw_un: Option<f64>,
    pub corrected_ls: f64,
    pub corrected_w: Option<f64>,
    pub corrected_un: Option<f64>,
    pub table_id: Option<String>,
    pub corrector: BiasCorrector,
    pub seed: u64,
}

/// Applies the bias corrector to the raw estimators.
///
/// Least squares averages `eta(n_i) lambda_i`; Wasserstein pairs
/// `eta(size of the tree occupying rank i)` with the i-th order statistic
/// (ties in lambda broken by tree index); uniform-node is analogous to
/// least squares.
pub fn corrected_estimates(
    forest: &Forest,
    per_tree_lambda: &[f64],
    corrector: BiasCorrector,
    table: Option<&QuantileTable>,
    un_values: Option<&[f64]>,
    seed: u64,
) -> Result<EstimateReport> {
    if forest.is_empty() {
        return Err(Error::EmptyForest);
    }
    if forest.len() != per_tree_lambda.len() {
        return Err(Error::LengthMismatch(format!(
            "{} trees but {} lambda values",
            forest.len(),
            per_tree_lambda.len()
        )));
    }
    if let Some(un) = un_values {
        if un.len() != forest.len() {
            return Err(Error::LengthMismatch(format!(
                "{} trees but {} uniform-node values",
                forest.len(),
                un.len()
            )));
        }
    }
    let sizes = forest.sizes();
    let n = forest.len();

    let raw_ls = lambda_ls(per_tree_lambda)?;
    let corrected_ls = per_tree_lambda
        .iter()
        .zip(&sizes)
        .map(|(l, &s)| corrector.eta(s) * l)
        .sum::<f64>()
        / n as f64;

    let (raw_w, corrected_w) = match table {
        Some(table) => {
            let raw = lambda_wasserstein(per_tree_lambda, table)?;
            // order statistic with tree sizes carried along
            let mut order: Vec<(f64, usize)> = per_tree_lambda
                .iter()
                .copied()
                .zip(sizes.iter().copied())
                .collect();
            order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("no NaN"));
            let mut acc = 0.0;
            for (i, &(lambda, size)) in order.iter().enumerate() {
                let block =
                    table.integral_inverse_cdf(i as f64 / n as f64, (i + 1) as f64 / n as f64)?;
                acc += corrector.eta(size) * lambda * block;
            }
            (Some(raw), Some(acc / table.second_moment()))
        }
        None => (None, None),
    };

    let (raw_un, corrected_un) = match un_values {
        Some(un) => {
            let raw = un.iter().sum::<f64>() / n as f64;
            let corrected = un
                .iter()
                .zip(&sizes)
                .map(|(d, &s)| corrector.eta(s) * d)
                .sum::<f64>()
                / n as f64;
            (Some(raw), Some(corrected))
        }
        None => (None, None),
    };

    Ok(EstimateReport {
        per_tree: sizes.into_iter().zip(per_tree_lambda.iter().copied()).collect(),
        raw_ls,
        raw_w,
        raw_un,
        corrected_ls,
        corrected_w,
        corrected_un,
        table_id: table.map(|t| t.id()),
        corrector,
        seed,
    })
}

impl EstimateReport {
    /// Key-value text serialization.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let field = |name: &str, v: Option<f64>| match v {
            Some(v) => format!("{name} = {v:.17e}\n"),
            None => String::new(),
        };
        out.push_str(&field("raw_ls", Some(self.raw_ls)));
        out.push_str(&field("raw_w", self.raw_w));
        out.push_str(&field("raw_un", self.raw_un));
        out.push_str(&field("corrected_ls", Some(self.corrected_ls)));
        out.push_str(&field("corrected_w", self.corrected_w));
        out.push_str(&field("corrected_un", self.corrected_un));
        if let Some(id) = &self.table_id {
            out.push_str(&format!("table_id = {id}\n"));
        }
        out.push_str(&format!("corrector.a = {:.17e}\n", self.corrector.a));
        out.push_str(&format!("corrector.b = {:.17e}\n", self.corrector.b));
        out.push_str(&format!("seed = {}\n", self.seed));
        let per_tree = self
            .per_tree
            .iter()
            .map(|(size, lambda)| format!("{size}:{lambda:.17e}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!("per_tree = {per_tree}\n"));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantile::build_quantile_table;
    use crate::rng::rng_from_seed;
    use crate::tree::build_tree;

    /// Reference quadrature of the piecewise-linear Harris path against E,
    /// with `sub` sub-samples per unit segment (trapezoid on the fine grid).
    fn lambda_hat_fine(path: &HarrisPath, sub: usize) -> f64 {
        let n = path.n();
        let walk = path.walk();
        let two_n = 2 * n;
        let m = two_n * sub;
        let h = 1.0 / m as f64;
        let value_at = |t: f64| {
            let x = t * two_n as f64;
            let k = (x.floor() as usize).min(two_n - 1);
            let frac = x - k as f64;
            walk[k] as f64 * (1.0 - frac) + walk[k + 1] as f64 * frac
        };
        let mut acc = 0.0;
        for j in 0..=m {
            let t = j as f64 * h;
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            acc += w * value_at(t) * mean_excursion(t).unwrap();
        }
        acc * h / (2.0 * (n as f64).sqrt() * E_NORM_SQ)
    }

    #[test]
    fn lambda_hat_single_node_against_fine_quadrature() {
        let path = harris_walk(&OrderedTree::singleton());
        let coarse = lambda_hat(&path);
        let fine = lambda_hat_fine(&path, 100_000);
        assert!(coarse > 0.0);
        // the breakpoint trapezoid rule treats E as linear per segment; with
        // only 2 segments the discrepancy against the fine reference stays
        // visible but bounded
        assert!((coarse - fine).abs() < 0.05, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn lambda_hat_matches_fine_quadrature_on_simulated_trees() {
        let dist = OffspringDistribution::binary(0.49).unwrap();
        let mut rng = rng_from_seed(31);
        for &n in &[50usize, 200] {
            let tree = simulate_tree(&dist, n, &mut rng).unwrap();
            let path = harris_walk(&tree);
            let coarse = lambda_hat(&path);
            let fine = lambda_hat_fine(&path, 200);
            assert!(
                (coarse - fine).abs() < 2e-3 * fine.max(1.0),
                "n = {n}: coarse {coarse} fine {fine}"
            );
        }
    }

    #[test]
    fn lambda_ls_basics() {
        assert!(lambda_ls(&[]).is_err());
        assert_eq!(lambda_ls(&[1.5]).unwrap(), 1.5);
        assert_eq!(lambda_ls(&[2.0, 2.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn lambda_wasserstein_constant_sample() {
        let table = build_quantile_table(2000, 200, 99).unwrap();
        let c = 1.7;
        let est = lambda_wasserstein(&[c; 10], &table).unwrap();
        // all order blocks collapse: estimate = c * mean / second_moment
        let expected = c * table.mean() / table.second_moment();
        assert!((est - expected).abs() < 1e-12);
    }

    #[test]
    fn lambda_wasserstein_invariances() {
        let table = build_quantile_table(2000, 200, 99).unwrap();
        let sample = vec![0.8, 1.9, 1.1, 1.4, 0.5];
        let base = lambda_wasserstein(&sample, &table).unwrap();
        let mut permuted = sample.clone();
        permuted.reverse();
        assert_eq!(lambda_wasserstein(&permuted, &table).unwrap(), base);
        let scaled: Vec<f64> = sample.iter().map(|x| 2.5 * x).collect();
        let est = lambda_wasserstein(&scaled, &table).unwrap();
        assert!((est - 2.5 * base).abs() < 1e-12);
    }

    #[test]
    fn empirical_mean_identity() {
        assert_eq!(empirical_mean(&OrderedTree::singleton()), 0.0);
        let cherry = build_tree(&[2, 0, 0]).unwrap();
        assert!((empirical_mean(&cherry) - 2.0 / 3.0).abs() < 1e-15);
        let dist = OffspringDistribution::binary(0.49).unwrap();
        let mut rng = rng_from_seed(8);
        let t = simulate_tree(&dist, 1000, &mut rng).unwrap();
        assert_eq!(empirical_mean(&t), 0.999);
    }

    #[test]
    fn empirical_variance_examples() {
        assert_eq!(empirical_variance(&OrderedTree::singleton()), 0.0);
        let cherry = build_tree(&[2, 0, 0]).unwrap();
        assert!((empirical_variance(&cherry) - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_node_on_cherry() {
        // values {0, sqrt(2/(3 pi))} with probabilities {1/3, 2/3}
        let cherry = build_tree(&[2, 0, 0]).unwrap();
        let mut rng = rng_from_seed(14);
        let leaf_value = (2.0 / (3.0 * std::f64::consts::PI)).sqrt();
        let draws = 30_000;
        let mut leaf_count = 0usize;
        for _ in 0..draws {
            let v = uniform_node_estimate(&cherry, &mut rng);
            if v == 0.0 {
                continue;
            }
            assert!((v - leaf_value).abs() < 1e-15);
            leaf_count += 1;
        }
        let freq = leaf_count as f64 / draws as f64;
        assert!((freq - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn uniform_node_single_and_determinism() {
        let single = OrderedTree::singleton();
        let mut rng = rng_from_seed(2);
        assert_eq!(uniform_node_estimate(&single, &mut rng), 0.0);
        let forest = Forest::new(vec![OrderedTree::singleton(); 4]);
        assert_eq!(lambda_un(&forest, &mut rng_from_seed(3)).unwrap(), 0.0);
        let dist = OffspringDistribution::binary(0.49).unwrap();
        let f = crate::sim::simulate_forest(&dist, &[30; 5], 4).unwrap();
        let a = lambda_un(&f, &mut rng_from_seed(5)).unwrap();
        let b = lambda_un(&f, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrector_eta_values() {
        let c = BiasCorrector::reference();
        let eta100 = c.eta(100);
        assert!((eta100 - (1.0 - 1.0 / (0.504273 * 10.0 + 0.9754839))).abs() < 1e-15);
        assert!((eta100 - 0.8339).abs() < 1e-3);
        assert_eq!(BiasCorrector::identity().eta(10), 1.0);
    }

    #[test]
    fn corrector_config_round_trip() {
        let c = BiasCorrector::reference();
        let back = BiasCorrector::from_config(&c.to_config()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn fit_recovers_noiseless_coefficients() {
        let (a, b) = (0.5, 1.0);
        let points: Vec<BiasPoint> = [20usize, 50, 100, 200, 400]
            .iter()
            .map(|&n| BiasPoint {
                n,
                sigma: 0.7,
                eta: 1.0 - 1.0 / (a * (n as f64).sqrt() + b),
            })
            .collect();
        let fit = fit_corrector_from_points(&points, 0.5).unwrap();
        assert!((fit.a - a).abs() < 1e-6);
        assert!((fit.b - b).abs() < 1e-6);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        let points: Vec<BiasPoint> = (0..5)
            .map(|_| BiasPoint { n: 50, sigma: 0.7, eta: 0.9 })
            .collect();
        assert!(matches!(
            fit_corrector_from_points(&points, 0.5),
            Err(Error::DegenerateFit(_))
        ));
        // all points below the sigma threshold
        let low: Vec<BiasPoint> = [20usize, 50, 100]
            .iter()
            .map(|&n| BiasPoint { n, sigma: 0.3, eta: 0.9 })
            .collect();
        assert!(fit_corrector_from_points(&low, 0.5).is_err());
    }

    #[test]
    fn corrected_identity_and_common_factor() {
        let dist = OffspringDistribution::binary(0.49).unwrap();
        let forest = crate::sim::simulate_forest(&dist, &[40; 6], 11).unwrap();
        let per_tree: Vec<f64> = forest.trees().iter().map(lambda_hat_tree).collect();
        let id = corrected_estimates(&forest, &per_tree, BiasCorrector::identity(), None, None, 0)
            .unwrap();
        assert_eq!(id.corrected_ls, id.raw_ls);
        // equal-size forest: corrected = eta(n) * raw exactly
        let c = BiasCorrector::reference();
        let rep = corrected_estimates(&forest, &per_tree, c, None, None, 0).unwrap();
        assert!((rep.corrected_ls - c.eta(40) * rep.raw_ls).abs() < 1e-14);
    }

    #[test]
    fn corrected_length_mismatch() {
        let forest = Forest::new(vec![OrderedTree::singleton(); 2]);
        let err = corrected_estimates(
            &forest,
            &[1.0],
            BiasCorrector::reference(),
            None,
            None,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch(_)));
    }

    #[test]
    fn report_text_contains_provenance() {
        let forest = Forest::new(vec![OrderedTree::singleton(); 2]);
        let rep = corrected_estimates(
            &forest,
            &[0.5, 0.6],
            BiasCorrector::reference(),
            None,
            None,
            42,
        )
        .unwrap();
        let text = rep.to_text();
        assert!(text.contains("raw_ls = "));
        assert!(text.contains("seed = 42"));
        assert!(text.contains("per_tree = 1:"));
        assert!(!text.contains("raw_w"));
    }
}
