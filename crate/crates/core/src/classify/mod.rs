//! Linear classifiers over selected features: a one-vs-one linear SVM and
//! ridge-regularised LDA.

mod lda;
mod svm;

pub use lda::{fit_lda, LdaModel};
pub use svm::{fit_linear_svm, fit_multiclass_svm, LinearSvmModel, MulticlassSvmModel, SvmConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Per-column mean and population standard deviation from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Constant columns keep unit scale so they map to zero.
    pub fn fit(x: &Matrix) -> Result<Standardizer> {
        let (n, d) = x.shape();
        if n == 0 {
            return Err(Error::Data("cannot standardize zero rows".into()));
        }
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "{} feature columns, standardizer fitted on {}",
                x.cols(),
                self.mean.len()
            )));
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x[(i, j)] - self.mean[j]) / self.std[j]
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Lda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classifier {
    Svm(MulticlassSvmModel),
    Lda(LdaModel),
}

impl Classifier {
    pub fn fit(
        kind: ClassifierKind,
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        svm: &SvmConfig,
    ) -> Result<Classifier> {
        Ok(match kind {
            ClassifierKind::Svm => Classifier::Svm(fit_multiclass_svm(x, y, n_classes, svm)?),
            ClassifierKind::Lda => Classifier::Lda(fit_lda(x, y, n_classes)?),
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        match self {
            Classifier::Svm(m) => m.predict(x),
            Classifier::Lda(m) => m.predict(x),
        }
    }
}

// Rows grouped by label; errors if any of 0..n_classes is absent.
pub(crate) fn check_labels(x: &Matrix, y: &[usize], n_classes: usize) -> Result<Vec<usize>> {
    if y.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            y.len(),
            x.rows()
        )));
    }
    if n_classes < 2 {
        return Err(Error::InvalidArgument("need at least 2 classes".into()));
    }
    let mut counts = vec![0; n_classes];
    for &l in y {
        if l >= n_classes {
            return Err(Error::Data(format!("label {l} outside 0..{n_classes}")));
        }
        counts[l] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Data(format!("class {missing} has no training rows")));
    }
    if !x.is_finite() {
        return Err(Error::Data("non-finite feature value".into()));
    }
    Ok(counts)
}
