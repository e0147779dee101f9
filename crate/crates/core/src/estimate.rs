// SPDX-License-Identifier: Apache-2.0

//! Surrogate models of a metric over configurations.
//!
//! [`PolyModel`] is affine in the monomials `{1, l_i, l_i*l_j}` and is the
//! model the optimisation problems are built from. [`TreeEnsemble`] is a
//! bagged set of depth-limited regression trees used as a general estimator.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::charac::Metric;
use crate::config::Config;
use crate::dataset::Dataset;
use crate::error::{bail, Result};
use crate::linalg::solve_normal;
use crate::stats::rank_quadratic_features;

/// Fraction of rows held out for testing.
pub const TEST_FRACTION: f64 = 0.2;
pub const TREE_COUNT: usize = 100;
pub const TREE_DEPTH: usize = 6;
/// Fraction of training rows drawn (without replacement) for each tree.
pub const BAGGING_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if min.is_finite() {
            Self { min, max }
        } else {
            Self { min: 0.0, max: 0.0 }
        }
    }

    /// Width of the range, 1 for a degenerate range.
    pub fn range(&self) -> f64 {
        let r = self.max - self.min;
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    pub fn scale(&self, v: f64) -> f64 {
        (v - self.min) / self.range()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolyModel {
    pub metric_name: String,
    pub intercept: f64,
    /// Coefficient of `l_i`, length `L`.
    pub linear_coeffs: Vec<f64>,
    /// `(i, j, coefficient)` with `i < j`, in the order the terms were given.
    pub quad_terms: Vec<(usize, usize, f64)>,
    /// Target range seen during training; coefficients are already unscaled.
    pub scaler: MinMax,
    /// Set when the ridge fallback was used.
    pub rank_deficient: bool,
}

impl PolyModel {
    pub fn removable_count(&self) -> usize {
        self.linear_coeffs.len()
    }

    pub fn predict(&self, config: &Config) -> f64 {
        let mut v = self.intercept;
        for (i, &c) in self.linear_coeffs.iter().enumerate() {
            if config.get(i) {
                v += c;
            }
        }
        for &(i, j, c) in &self.quad_terms {
            if config.get(i) && config.get(j) {
                v += c;
            }
        }
        v
    }

    /// The same model restricted to its first `n_quad` quadratic terms.
    pub fn truncated(&self, n_quad: usize) -> PolyModel {
        let mut m = self.clone();
        m.quad_terms.truncate(n_quad);
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitReport {
    pub r2_train: f64,
    pub r2_test: f64,
    pub mae_train: f64,
    pub mae_test: f64,
    pub mse_train: f64,
    pub mse_test: f64,
    pub n_quad: usize,
    pub n_train: usize,
    pub n_test: usize,
}

/// Deterministic 80/20 split of `0..n`, each part in ascending order. With
/// fewer than five rows the test part is empty.
pub fn train_test_split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (n as f64 * TEST_FRACTION) as usize;
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

/// `(r2, mae, mse)`; R^2 of a constant truth is 1 for a perfect fit, else 0.
pub fn regression_scores(truth: &[f64], pred: &[f64]) -> (f64, f64, f64) {
    if truth.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let (mut ss_res, mut ss_tot, mut abs) = (0.0, 0.0, 0.0);
    for (&t, &p) in truth.iter().zip(pred) {
        ss_res += (t - p) * (t - p);
        ss_tot += (t - mean) * (t - mean);
        abs += libm::fabs(t - p);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    (r2, abs / n, ss_res / n)
}

fn report(
    dataset: &Dataset,
    metric: Metric,
    train: &[usize],
    test: &[usize],
    n_quad: usize,
    predict: impl Fn(&Config) -> f64,
) -> FitReport {
    let score = |rows: &[usize]| {
        let truth: Vec<f64> = rows.iter().map(|&r| metric.of(&dataset.records[r])).collect();
        let pred: Vec<f64> = rows.iter().map(|&r| predict(&dataset.records[r].config)).collect();
        regression_scores(&truth, &pred)
    };
    let (r2_train, mae_train, mse_train) = score(train);
    let (r2_test, mae_test, mse_test) = if test.is_empty() { (r2_train, mae_train, mse_train) } else { score(test) };
    FitReport { r2_train, r2_test, mae_train, mae_test, mse_train, mse_test, n_quad, n_train: train.len(), n_test: test.len() }
}

fn check_terms(l: usize, terms: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(terms.len());
    for &(a, b) in terms {
        let (i, j) = (a.min(b), a.max(b));
        if i == j || j >= l {
            bail!(Validation, "quadratic term ({a},{b}) is not a pair of distinct LUTs below {l}");
        }
        if !seen.insert((i, j)) {
            bail!(Validation, "quadratic term ({i},{j}) repeated");
        }
        out.push((i, j));
    }
    Ok(out)
}

/// Least-squares fit of `intercept + linear + quad_terms` on the given rows.
pub fn fit_poly_rows(dataset: &Dataset, metric: Metric, quad_terms: &[(usize, usize)], rows: &[usize]) -> Result<PolyModel> {
    let l = dataset.removable_count;
    let terms = check_terms(l, quad_terms)?;
    if rows.is_empty() {
        bail!(Domain, "no training rows");
    }
    let words = rows.len().div_ceil(64);
    let nf = 1 + l + terms.len();
    let mut cols = vec![0u64; nf * words];
    for (r, &row) in rows.iter().enumerate() {
        let c = dataset.records[row].config;
        let bit = 1u64 << (r % 64);
        let w = r / 64;
        cols[w] |= bit;
        for i in 0..l {
            if c.get(i) {
                cols[(1 + i) * words + w] |= bit;
            }
        }
        for (t, &(i, j)) in terms.iter().enumerate() {
            if c.get(i) && c.get(j) {
                cols[(1 + l + t) * words + w] |= bit;
            }
        }
    }
    let target: Vec<f64> = rows.iter().map(|&r| metric.of(&dataset.records[r])).collect();
    let scaler = MinMax::fit(target.iter().copied());
    let scaled: Vec<f64> = target.iter().map(|&v| scaler.scale(v)).collect();
    let col = |f: usize| &cols[f * words..(f + 1) * words];
    let mut gram = vec![0.0; nf * nf];
    let mut rhs = vec![0.0; nf];
    for a in 0..nf {
        let ca = col(a);
        for b in a..nf {
            let cb = col(b);
            let n: u32 = ca.iter().zip(cb).map(|(x, y)| (x & y).count_ones()).sum();
            gram[a * nf + b] = n as f64;
            gram[b * nf + a] = n as f64;
        }
        let mut s = 0.0;
        for (w, &word) in ca.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                s += scaled[w * 64 + bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
        }
        rhs[a] = s;
    }
    let (beta, rank_deficient) = solve_normal(&gram, &rhs, nf);
    let range = scaler.range();
    Ok(PolyModel {
        metric_name: metric.name().to_string(),
        intercept: beta[0] * range + scaler.min,
        linear_coeffs: beta[1..=l].iter().map(|b| b * range).collect(),
        quad_terms: terms.iter().zip(&beta[1 + l..]).map(|(&(i, j), b)| (i, j, b * range)).collect(),
        scaler,
        rank_deficient,
    })
}

/// Fits a polynomial model on the training part of a seeded 80/20 split and
/// scores it on both parts in the metric's own units.
pub fn fit_poly(dataset: &Dataset, metric: Metric, quad_terms: &[(usize, usize)], split_seed: u64) -> Result<(PolyModel, FitReport)> {
    let (train, test) = train_test_split(dataset.len(), split_seed);
    let model = fit_poly_rows(dataset, metric, quad_terms, &train)?;
    let rep = report(dataset, metric, &train, &test, quad_terms.len(), |c| model.predict(c));
    Ok((model, rep))
}

/// Number of ranked quadratic terms used when none is requested.
pub fn default_poly_budget(l: usize) -> usize {
    (l * l.saturating_sub(1) / 2).min(2 * l)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Node {
    Leaf(f64),
    /// Children for `l_feature == 0` and `l_feature == 1`.
    Split {
        feature: usize,
        zero: usize,
        one: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, config: &Config) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, zero, one } => at = if config.get(feature) { one } else { zero },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TreeEnsemble {
    pub metric_name: String,
    pub trees: Vec<Tree>,
}

impl TreeEnsemble {
    pub fn predict(&self, config: &Config) -> f64 {
        self.trees.iter().map(|t| t.predict(config)).sum::<f64>() / self.trees.len() as f64
    }
}

struct TreeBuilder<'a> {
    configs: &'a [Config],
    target: &'a [f64],
    l: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let n = rows.len() as f64;
        let sum: f64 = rows.iter().map(|&r| self.target[r]).sum();
        let sq: f64 = rows.iter().map(|&r| self.target[r] * self.target[r]).sum();
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(sum / n));
        if depth == 0 || rows.len() < 2 {
            return at;
        }
        let parent_sse = (sq - sum * sum / n).max(0.0);
        let mut best: Option<(usize, f64)> = None;
        for f in 0..self.l {
            let (mut n1, mut s1, mut q1) = (0.0, 0.0, 0.0);
            for &r in rows {
                if self.configs[r].get(f) {
                    let t = self.target[r];
                    n1 += 1.0;
                    s1 += t;
                    q1 += t * t;
                }
            }
            let n0 = n - n1;
            if n1 == 0.0 || n0 == 0.0 {
                continue;
            }
            let (s0, q0) = (sum - s1, sq - q1);
            let sse = (q1 - s1 * s1 / n1) + (q0 - s0 * s0 / n0);
            if best.is_none_or(|(_, b)| sse < b) {
                best = Some((f, sse));
            }
        }
        let Some((feature, sse)) = best else { return at };
        if parent_sse - sse <= 1e-12 * parent_sse.max(f64::MIN_POSITIVE) {
            return at;
        }
        let (ones, zeros): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| self.configs[r].get(feature));
        let zero = self.grow(&zeros, depth - 1);
        let one = self.grow(&ones, depth - 1);
        self.nodes[at] = Node::Split { feature, zero, one };
        at
    }
}

/// Fits the fixed-size bagged ensemble on `rows`.
pub fn fit_tree_ensemble_rows(dataset: &Dataset, metric: Metric, rows: &[usize], seed: u64) -> Result<TreeEnsemble> {
    if rows.is_empty() {
        bail!(Domain, "no training rows");
    }
    let configs: Vec<Config> = dataset.configs().collect();
    let target = dataset.column(metric);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = ((rows.len() as f64 * BAGGING_FRACTION) as usize).max(1);
    let mut trees = Vec::with_capacity(TREE_COUNT);
    let mut pool = rows.to_vec();
    for _ in 0..TREE_COUNT {
        pool.copy_from_slice(rows);
        let (bag, _) = pool.partial_shuffle(&mut rng, take);
        let mut bag = bag.to_vec();
        bag.sort_unstable();
        let mut b = TreeBuilder { configs: &configs, target: &target, l: dataset.removable_count, nodes: Vec::new() };
        b.grow(&bag, TREE_DEPTH);
        trees.push(Tree { nodes: b.nodes });
    }
    Ok(TreeEnsemble { metric_name: metric.name().to_string(), trees })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EstimatorKind {
    Poly,
    TreeEnsemble,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind", content = "model"))]
pub enum Estimator {
    Poly(PolyModel),
    TreeEnsemble(TreeEnsemble),
}

impl Estimator {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::Poly(_) => EstimatorKind::Poly,
            Estimator::TreeEnsemble(_) => EstimatorKind::TreeEnsemble,
        }
    }

    pub fn predict(&self, config: &Config) -> f64 {
        match self {
            Estimator::Poly(m) => m.predict(config),
            Estimator::TreeEnsemble(m) => m.predict(config),
        }
    }
}

/// Fits an estimator of `kind`. Polynomial estimators use the first
/// [`default_poly_budget`] pairs of the dataset's correlation ranking.
pub fn fit_estimator(dataset: &Dataset, metric: Metric, kind: EstimatorKind, seed: u64) -> Result<(Estimator, FitReport)> {
    if dataset.is_empty() {
        bail!(Domain, "empty dataset");
    }
    match kind {
        EstimatorKind::Poly => {
            let mut ranked = match rank_quadratic_features(dataset, metric) {
                Ok(r) => r,
                Err(crate::Error::Domain(_)) => Vec::new(),
                Err(e) => return Err(e),
            };
            ranked.truncate(default_poly_budget(dataset.removable_count));
            let (m, r) = fit_poly(dataset, metric, &ranked, seed)?;
            Ok((Estimator::Poly(m), r))
        }
        EstimatorKind::TreeEnsemble => {
            let (train, test) = train_test_split(dataset.len(), seed);
            let m = fit_tree_ensemble_rows(dataset, metric, &train, seed)?;
            let rep = report(dataset, metric, &train, &test, 0, |c| m.predict(c));
            Ok((Estimator::TreeEnsemble(m), rep))
        }
    }
}
