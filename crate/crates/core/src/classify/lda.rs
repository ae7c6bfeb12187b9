//! Gaussian equal-covariance discriminant with a ridge on the pooled
//! covariance.

use serde::{Deserialize, Serialize};

use super::check_labels;
use crate::error::Result;
use crate::numerics::decomp::spd_solve;
use crate::numerics::{dot, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub means: Vec<Vec<f64>>,
    /// Inverse of the ridge-regularised pooled covariance.
    pub precision: Matrix,
    pub priors: Vec<f64>,
    pub ridge: f64,
}

/// Pooled within-class covariance (divided by `n − K`, at least 1) plus
/// `1e-6·trace/d` on the diagonal.
pub fn fit_lda(x: &Matrix, y: &[usize], n_classes: usize) -> Result<LdaModel> {
    let counts = check_labels(x, y, n_classes)?;
    let (n, d) = x.shape();
    let mut means = vec![vec![0.0; d]; n_classes];
    for i in 0..n {
        for (m, v) in means[y[i]].iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c as f64);
    }

    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let r: Vec<f64> = x
            .row(i)
            .iter()
            .zip(&means[y[i]])
            .map(|(a, b)| a - b)
            .collect();
        for a in 0..d {
            let row = cov.row_mut(a);
            for b in 0..d {
                row[b] += r[a] * r[b];
            }
        }
    }
    cov.scale_assign(1.0 / (n.saturating_sub(n_classes)).max(1) as f64);
    let trace = cov.trace();
    let ridge = if trace > 0.0 {
        1e-6 * trace / d as f64
    } else {
        1e-6
    };
    for a in 0..d {
        cov.row_mut(a)[a] += ridge;
    }
    let precision = spd_solve(&cov.symmetrize(), &Matrix::identity(d))?.symmetrize();
    let priors = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(LdaModel {
        means,
        precision,
        priors,
        ridge,
    })
}

impl LdaModel {
    /// `xᵀΣ⁻¹μₖ − ½μₖᵀΣ⁻¹μₖ + ln πₖ` for every class.
    pub fn discriminants(&self, row: &[f64]) -> Vec<f64> {
        self.means
            .iter()
            .zip(&self.priors)
            .map(|(mu, prior)| {
                let pm: Vec<f64> = (0..mu.len())
                    .map(|a| dot(self.precision.row(a), mu))
                    .collect();
                dot(row, &pm) - 0.5 * dot(mu, &pm) + prior.ln()
            })
            .collect()
    }

    /// Highest discriminant; ties go to the lower class index.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        if x.cols() != self.precision.rows() {
            return Err(crate::Error::Shape(format!(
                "{} feature columns, model has {}",
                x.cols(),
                self.precision.rows()
            )));
        }
        Ok((0..x.rows())
            .map(|i| {
                let g = self.discriminants(x.row(i));
                let mut best = 0;
                for k in 1..g.len() {
                    if g[k] > g[best] {
                        best = k;
                    }
                }
                best
            })
            .collect())
    }
}
