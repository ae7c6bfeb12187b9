//! Task-related component analysis: per-class covariance sums and the
//! spatial filters derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sym_generalized_eig, Matrix};

/// Summed inter-trial (`s`) and self-trial (`q`) covariances of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovPair {
    pub s: Matrix,
    pub q: Matrix,
    pub class: usize,
    pub trials: usize,
}

/// Accumulates the covariance pair for the trials of one class.
///
/// `Q = Σᵢ XᵢXᵢᵀ` and `S = Σ_{i<j} (XᵢXⱼᵀ + XⱼXᵢᵀ)`, the latter via
/// `S = X_sum·X_sumᵀ − Q`.
pub fn class_covariances(trials: &[&Matrix], class: usize) -> Result<CovPair> {
    if trials.len() < 2 {
        return Err(Error::Data(format!(
            "class {class} has {} trial(s); at least 2 are needed",
            trials.len()
        )));
    }
    let shape = trials[0].shape();
    if trials.iter().any(|x| x.shape() != shape) {
        return Err(Error::Shape(format!(
            "class {class} trials differ in shape"
        )));
    }
    let c = shape.0;
    let mut q = Matrix::zeros(c, c);
    let mut sum = Matrix::zeros(shape.0, shape.1);
    for x in trials {
        q.add_assign(&x.matmul_tr(x));
        sum.add_assign(x);
    }
    let s = sum.matmul_tr(&sum).sub(&q).symmetrize();
    Ok(CovPair {
        s,
        q: q.symmetrize(),
        class,
        trials: trials.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterVariant {
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialFilter {
    /// `C×2P` (binary) or `C×P` (multiclass).
    pub w: Matrix,
    pub variant: FilterVariant,
    pub p: usize,
    /// Eigenvalues backing each column, in column order.
    pub eigenvalues: Vec<f64>,
}

/// `W = [ω₁, ω₂]`: the top-`p` eigenvectors of each class's own problem.
pub fn fit_binary_filter(cov1: &CovPair, cov2: &CovPair, p: usize) -> Result<SpatialFilter> {
    if cov1.s.shape() != cov2.s.shape() {
        return Err(Error::Shape(
            "class covariances differ in channel count".into(),
        ));
    }
    let g1 = sym_generalized_eig(&cov1.s, &cov1.q, p)?;
    let g2 = sym_generalized_eig(&cov2.s, &cov2.q, p)?;
    let c = cov1.s.rows();
    let w = Matrix::from_fn(c, 2 * p, |i, j| {
        if j < p {
            g1.eigenvectors[(i, j)]
        } else {
            g2.eigenvectors[(i, j - p)]
        }
    });
    let mut eigenvalues = g1.eigenvalues;
    eigenvalues.extend(g2.eigenvalues);
    Ok(SpatialFilter {
        w,
        variant: FilterVariant::Binary,
        p,
        eigenvalues,
    })
}

/// One eigenproblem on the class-pooled sums; always `p` columns.
pub fn fit_multiclass_filter(covs: &[CovPair], p: usize) -> Result<SpatialFilter> {
    if covs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "multiclass filter needs at least 2 classes, got {}",
            covs.len()
        )));
    }
    let shape = covs[0].s.shape();
    if covs.iter().any(|c| c.s.shape() != shape) {
        return Err(Error::Shape(
            "class covariances differ in channel count".into(),
        ));
    }
    let mut s = Matrix::zeros(shape.0, shape.1);
    let mut q = Matrix::zeros(shape.0, shape.1);
    for cov in covs {
        s.add_assign(&cov.s);
        q.add_assign(&cov.q);
    }
    let g = sym_generalized_eig(&s, &q, p)?;
    Ok(SpatialFilter {
        w: g.eigenvectors,
        variant: FilterVariant::Multiclass,
        p,
        eigenvalues: g.eigenvalues,
    })
}
