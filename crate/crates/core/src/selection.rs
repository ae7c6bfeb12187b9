//! Mutual information and minimum-redundancy maximum-relevance ranking over
//! pooled filter-bank features.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTag;
use crate::numerics::Matrix;

/// Equal-frequency bins used for feature columns.
pub const MI_BINS: usize = 8;

/// Trials × features with per-column provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub provenance: Vec<FeatureTag>,
    pub labels: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(values: Matrix, provenance: Vec<FeatureTag>, labels: Vec<usize>) -> Result<Self> {
        if provenance.len() != values.cols() {
            return Err(Error::Shape(format!(
                "{} provenance tags for {} columns",
                provenance.len(),
                values.cols()
            )));
        }
        if labels.len() != values.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                values.rows()
            )));
        }
        if !values.is_finite() {
            return Err(Error::Data("feature matrix has non-finite entries".into()));
        }
        Ok(FeatureMatrix {
            values,
            provenance,
            labels,
        })
    }

    pub fn n_trials(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    pub fn headers(&self) -> Vec<String> {
        self.provenance.iter().map(FeatureTag::header).collect()
    }

    pub fn select_columns(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select_columns(idx),
            provenance: idx.iter().map(|&j| self.provenance[j]).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select_rows(idx),
            provenance: self.provenance.clone(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// CSV with a `label` column followed by one column per feature.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for h in self.headers() {
            out.push(',');
            out.push_str(&h);
        }
        out.push('\n');
        for (i, label) in self.labels.iter().enumerate() {
            write!(out, "{label}").unwrap();
            for v in self.values.row(i) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub order: Vec<usize>,
    /// Criterion value at which each column was picked.
    pub scores: Vec<f64>,
}

/// Equal-frequency binning; tied values never straddle a bin edge and go
/// to the lower bin.
pub fn discretize(column: &[f64], bins: usize) -> Result<Vec<usize>> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "bins must be ≥ 2, got {bins}"
        )));
    }
    let n = column.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..bins)
        .map(|b| sorted[((b * n) / bins).max(1) - 1])
        .collect();
    Ok(column
        .iter()
        .map(|v| edges.partition_point(|e| e < v))
        .collect())
}

/// Plug-in mutual information in nats from the joint histogram.
pub fn mutual_information(x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n == 0 {
        return Ok(0.0);
    }
    let nx = x.iter().max().unwrap() + 1;
    let ny = y.iter().max().unwrap() + 1;
    let mut joint = vec![0usize; nx * ny];
    let mut px = vec![0usize; nx];
    let mut py = vec![0usize; ny];
    for (&a, &b) in x.iter().zip(y) {
        joint[a * ny + b] += 1;
        px[a] += 1;
        py[b] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for a in 0..nx {
        for b in 0..ny {
            let c = joint[a * ny + b];
            if c > 0 {
                let c = c as f64;
                mi += c / nf * (c * nf / (px[a] as f64 * py[b] as f64)).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Plug-in entropy in nats.
pub fn entropy(x: &[usize]) -> f64 {
    let n = x.len() as f64;
    let mut counts = vec![0usize; x.iter().max().map_or(0, |m| m + 1)];
    for &v in x {
        counts[v] += 1;
    }
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Greedy difference-form mRMR over all columns.
///
/// The first pick maximises `I(f; y)`; each later pick maximises
/// `I(f; y) − mean_{s∈S} I(f; s)`. Ties go to the lowest column index.
pub fn mrmr_rank(features: &FeatureMatrix) -> Result<FeatureRanking> {
    let f = features.n_features();
    if f == 0 {
        return Err(Error::InvalidArgument("no features to rank".into()));
    }
    let mut seen = features.labels.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() < 2 {
        return Err(Error::InvalidArgument(
            "ranking needs at least 2 classes".into(),
        ));
    }

    let columns: Vec<Vec<usize>> = (0..f)
        .into_par_iter()
        .map(|j| discretize(&features.values.column(j), MI_BINS))
        .collect::<Result<_>>()?;
    let relevance: Vec<f64> = columns
        .par_iter()
        .map(|c| mutual_information(c, &features.labels))
        .collect::<Result<_>>()?;
    rank_discrete(&columns, &relevance)
}

fn rank_discrete(columns: &[Vec<usize>], relevance: &[f64]) -> Result<FeatureRanking> {
    let f = columns.len();
    let mut picked = vec![false; f];
    let mut redundancy = vec![0.0; f];
    let mut order = Vec::with_capacity(f);
    let mut scores = Vec::with_capacity(f);

    for step in 0..f {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..f).filter(|&j| !picked[j]) {
            let score = if step == 0 {
                relevance[j]
            } else {
                relevance[j] - redundancy[j] / step as f64
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let (j, score) = best.expect("an unpicked column remains");
        picked[j] = true;
        order.push(j);
        scores.push(score);

        let chosen = &columns[j];
        let added: Vec<(usize, f64)> = (0..f)
            .into_par_iter()
            .filter(|&k| !picked[k])
            .map(|k| mutual_information(&columns[k], chosen).map(|mi| (k, mi)))
            .collect::<Result<_>>()?;
        for (k, mi) in added {
            redundancy[k] += mi;
        }
    }
    Ok(FeatureRanking { order, scores })
}

/// The first `k` ranked columns, in ranking order.
pub fn select_top_k(
    features: &FeatureMatrix,
    ranking: &FeatureRanking,
    k: usize,
) -> Result<FeatureMatrix> {
    if k == 0 || k > features.n_features() || ranking.order.len() != features.n_features() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            features.n_features()
        )));
    }
    Ok(features.select_columns(&ranking.order[..k]))
}
