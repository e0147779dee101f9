// SPDX-License-Identifier: Apache-2.0

//! Bivariate and two-regressor correlation of LUT usage against a metric.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::charac::Metric;
use crate::dataset::Dataset;
use crate::error::{bail, Error, Result};
use crate::linalg::solve_normal;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn centered(xs: &[f64]) -> Vec<f64> {
    let m = mean(xs);
    xs.iter().map(|x| x - m).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        bail!(Domain, "pearson needs two equal-length vectors of length >= 2, got {} and {}", xs.len(), ys.len());
    }
    let (cx, cy) = (centered(xs), centered(ys));
    let (sxx, syy) = (dot(&cx, &cx), dot(&cy, &cy));
    if sxx == 0.0 || syy == 0.0 {
        bail!(UndefinedCorrelation, "zero variance");
    }
    Ok((dot(&cx, &cy) / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Coefficient of determination of an intercept + `columns` least-squares
/// fit of `ys`, from residuals and clamped to `[0, 1]`. Constant and
/// collinear columns are dropped first.
pub fn ols_r2(columns: &[&[f64]], ys: &[f64]) -> Result<f64> {
    let n = ys.len();
    if n < 2 || columns.iter().any(|c| c.len() != n) {
        bail!(Domain, "regression needs equal-length columns of length >= 2");
    }
    let cy = centered(ys);
    let syy = dot(&cy, &cy);
    if syy == 0.0 {
        bail!(UndefinedCorrelation, "target has zero variance");
    }
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for c in columns {
        let cc = centered(c);
        let s = dot(&cc, &cc);
        if s == 0.0 {
            continue;
        }
        let collinear = kept.iter().any(|k| {
            let (skk, skc) = (dot(k, k), dot(k, &cc));
            skk * s - skc * skc <= 1e-12 * skk * s
        });
        if !collinear {
            kept.push(cc);
        }
    }
    if kept.is_empty() {
        bail!(UndefinedCorrelation, "every regressor has zero variance");
    }
    let k = kept.len();
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for a in 0..k {
        for b in 0..k {
            gram[a * k + b] = dot(&kept[a], &kept[b]);
        }
        rhs[a] = dot(&kept[a], &cy);
    }
    let (beta, _) = solve_normal(&gram, &rhs, k);
    let ss_res: f64 = (0..n)
        .map(|r| {
            let fit: f64 = (0..k).map(|a| beta[a] * kept[a][r]).sum();
            let e = cy[r] - fit;
            e * e
        })
        .sum();
    Ok((1.0 - ss_res / syy).clamp(0.0, 1.0))
}

/// Multivariate correlation `sqrt(R^2)` of `metric` on LUTs `x` and `y`.
/// Symmetric in `x` and `y` bit for bit.
pub fn multivariate_r(dataset: &Dataset, x: usize, y: usize, metric: Metric) -> Result<f64> {
    let l = dataset.removable_count;
    if x >= l || y >= l {
        bail!(Domain, "LUT index out of range 0..{l}");
    }
    if dataset.is_empty() {
        bail!(Domain, "empty dataset");
    }
    let (lo, hi) = (x.min(y), x.max(y));
    let target = dataset.column(metric);
    let cx = dataset.lut_column(lo);
    if lo == hi {
        return Ok(libm::fabs(pearson(&cx, &target)?));
    }
    let cy = dataset.lut_column(hi);
    Ok(libm::sqrt(ols_r2(&[&cx, &cy], &target)?))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationReport {
    pub metric_name: String,
    /// Pearson r of each LUT against the metric.
    pub bivariate: Vec<f64>,
    /// Row-major `L x L`, diagonal holds `|bivariate|`.
    pub multivariate: Vec<f64>,
    /// All pairs `i < j` by descending multivariate r.
    pub ranking: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

impl CorrelationReport {
    pub fn len(&self) -> usize {
        self.bivariate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bivariate.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.multivariate[i * self.len() + j]
    }
}

/// Sorts pairs by descending score, undefined scores last, ties by `(i, j)`.
pub fn rank_pairs(mut scored: Vec<((usize, usize), Option<f64>)>) -> Vec<(usize, usize)> {
    scored.sort_by(|(pa, a), (pb, b)| match (a, b) {
        (Some(a), Some(b)) => b.total_cmp(a).then(pa.cmp(pb)),
        (Some(_), None) => core::cmp::Ordering::Less,
        (None, Some(_)) => core::cmp::Ordering::Greater,
        (None, None) => pa.cmp(pb),
    });
    scored.into_iter().map(|(p, _)| p).collect()
}

pub fn correlation_report(dataset: &Dataset, metric: Metric) -> Result<CorrelationReport> {
    if dataset.is_empty() {
        bail!(Domain, "empty dataset");
    }
    let l = dataset.removable_count;
    let target = dataset.column(metric);
    let mut warnings = Vec::new();
    let mut bivariate = vec![0.0; l];
    for (i, b) in bivariate.iter_mut().enumerate() {
        match pearson(&dataset.lut_column(i), &target) {
            Ok(r) => *b = r,
            Err(Error::UndefinedCorrelation(why)) => {
                warnings.push(alloc::format!("LUT {i}: {why}, reported as 0"));
            }
            Err(e) => return Err(e),
        }
    }
    let mut multivariate = vec![0.0; l * l];
    let mut scored = Vec::with_capacity(l * l.saturating_sub(1) / 2);
    for i in 0..l {
        multivariate[i * l + i] = libm::fabs(bivariate[i]);
        for j in i + 1..l {
            let r = match multivariate_r(dataset, i, j, metric) {
                Ok(r) => Some(r),
                Err(Error::UndefinedCorrelation(why)) => {
                    warnings.push(alloc::format!("LUTs ({i},{j}): {why}, reported as 0"));
                    None
                }
                Err(e) => return Err(e),
            };
            let v = r.unwrap_or(0.0);
            multivariate[i * l + j] = v;
            multivariate[j * l + i] = v;
            scored.push(((i, j), r));
        }
    }
    Ok(CorrelationReport { metric_name: metric.name().to_string(), bivariate, multivariate, ranking: rank_pairs(scored), warnings })
}

/// All `C(L, 2)` LUT pairs ranked by multivariate correlation with `metric`.
pub fn rank_quadratic_features(dataset: &Dataset, metric: Metric) -> Result<Vec<(usize, usize)>> {
    Ok(correlation_report(dataset, metric)?.ranking)
}
