//! Soft-margin linear SVM by dual coordinate descent, and its one-vs-one
//! multiclass composition.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, Standardizer};
use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c_reg: f64,
    /// Relative duality-gap tolerance.
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c_reg: 1.0,
            tolerance: 1e-6,
            max_epochs: 100_000,
            seed: 0,
        }
    }
}

/// `f(x) = w·x + b`; positive values favour `classes.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c_reg: f64,
    pub classes: (usize, usize),
    pub epochs: usize,
    pub duality_gap: f64,
}

impl LinearSvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict_row(&self, x: &[f64]) -> usize {
        if self.decision(x) >= 0.0 {
            self.classes.0
        } else {
            self.classes.1
        }
    }
}

/// Trains on rows labelled with exactly two distinct values; the lower
/// label is the positive side.
///
/// The bias is learned as the weight of a constant augmented feature.
/// Coordinates are visited in a seeded random order each epoch, and
/// training stops once the primal-dual gap falls below
/// `tolerance·|dual objective|`.
pub fn fit_linear_svm(x: &Matrix, y: &[usize], cfg: &SvmConfig) -> Result<LinearSvmModel> {
    if y.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            y.len(),
            x.rows()
        )));
    }
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::Data(format!(
            "binary SVM needs exactly 2 classes, got {}",
            classes.len()
        )));
    }
    if x.cols() == 0 {
        return Err(Error::InvalidArgument(
            "SVM needs at least one feature".into(),
        ));
    }
    if !(cfg.c_reg > 0.0) || !cfg.c_reg.is_finite() {
        return Err(Error::Config(format!(
            "C must be positive, got {}",
            cfg.c_reg
        )));
    }
    if !x.is_finite() {
        return Err(Error::Data("non-finite feature value".into()));
    }

    let (n, d) = x.shape();
    let c = cfg.c_reg;
    let sign: Vec<f64> = y
        .iter()
        .map(|&l| if l == classes[0] { 1.0 } else { -1.0 })
        .collect();
    // Squared norms of the augmented rows.
    let qii: Vec<f64> = (0..n).map(|i| dot(x.row(i), x.row(i)) + 1.0).collect();

    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gap = f64::INFINITY;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let xi = x.row(i);
            let g = sign[i] * (dot(&w, xi) + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            if pg == 0.0 {
                continue;
            }
            let old = alpha[i];
            alpha[i] = (old - g / qii[i]).clamp(0.0, c);
            let delta = (alpha[i] - old) * sign[i];
            if delta != 0.0 {
                for (wj, xj) in w.iter_mut().zip(xi) {
                    *wj += delta * xj;
                }
                b += delta;
            }
        }

        let wnorm2 = dot(&w, &w) + b * b;
        let hinge: f64 = (0..n)
            .map(|i| (1.0 - sign[i] * (dot(&w, x.row(i)) + b)).max(0.0))
            .sum();
        let primal = 0.5 * wnorm2 + c * hinge;
        let dual = alpha.iter().sum::<f64>() - 0.5 * wnorm2;
        gap = primal - dual;
        if gap <= cfg.tolerance * dual.abs() {
            return Ok(LinearSvmModel {
                weights: w,
                bias: b,
                c_reg: c,
                classes: (classes[0], classes[1]),
                epochs: epoch,
                duality_gap: gap,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "SVM duality gap {gap:.3e} after {} epochs",
        cfg.max_epochs
    )))
}

/// One model per unordered class pair over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvmModel {
    pub n_classes: usize,
    pub pairs: Vec<LinearSvmModel>,
    pub standardizer: Standardizer,
}

pub fn fit_multiclass_svm(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    cfg: &SvmConfig,
) -> Result<MulticlassSvmModel> {
    check_labels(x, y, n_classes)?;
    let standardizer = Standardizer::fit(x)?;
    let z = standardizer.apply(x)?;
    let pairs: Vec<(usize, usize)> = (0..n_classes)
        .flat_map(|a| (a + 1..n_classes).map(move |b| (a, b)))
        .collect();
    let models = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(a, b))| {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
            let sub_y: Vec<usize> = rows.iter().map(|&i| y[i]).collect();
            let pair_cfg = SvmConfig {
                seed: cfg.seed.wrapping_add(idx as u64),
                ..*cfg
            };
            fit_linear_svm(&z.select_rows(&rows), &sub_y, &pair_cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassSvmModel {
        n_classes,
        pairs: models,
        standardizer,
    })
}

impl MulticlassSvmModel {
    /// Majority vote; ties go to the larger summed decision value in the
    /// class's favour, then to the lower class index.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let z = self.standardizer.apply(x)?;
        Ok((0..z.rows()).map(|i| self.vote(z.row(i))).collect())
    }

    fn vote(&self, row: &[f64]) -> usize {
        let k = self.n_classes;
        let mut votes = vec![0usize; k];
        let mut margin = vec![0.0; k];
        for m in &self.pairs {
            let f = m.decision(row);
            let (a, b) = m.classes;
            if f > 0.0 {
                votes[a] += 1;
            } else if f < 0.0 {
                votes[b] += 1;
            }
            margin[a] += f;
            margin[b] -= f;
        }
        let mut best = 0;
        for c in 1..k {
            if votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best]) {
                best = c;
            }
        }
        best
    }
}
