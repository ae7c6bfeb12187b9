use serde::{Deserialize, Serialize};

use super::decomp::{cholesky, solve_lower, solve_lower_transposed, symmetric_eigen};
use super::matrix::{norm, Matrix};
use crate::error::{Error, Result};

/// Top generalized eigenpairs of a symmetric-definite pencil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevdResult {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `C×P`, unit Euclidean norm per column, largest-magnitude entry positive.
    pub eigenvectors: Matrix,
    /// Ridge added to the right-hand matrix before factorisation (0 when none).
    pub ridge: f64,
}

/// Solves `S·w = λ·Q·w` for the `p` largest eigenvalues.
///
/// `Q` is Cholesky-factored and the problem reduced to the standard
/// symmetric eigenproblem `L⁻¹ S L⁻ᵀ`. A ridge of `1e-8·tr(Q)/C` is added
/// when `Q`'s smallest eigenvalue falls below `1e-10·tr(Q)/C`.
pub fn sym_generalized_eig(s: &Matrix, q: &Matrix, p: usize) -> Result<GevdResult> {
    if !s.is_square() || !q.is_square() || s.shape() != q.shape() {
        return Err(Error::Shape(format!(
            "generalized eigenproblem needs equal square matrices, got {:?} and {:?}",
            s.shape(),
            q.shape()
        )));
    }
    let c = s.rows();
    if p == 0 || p > c {
        return Err(Error::InvalidArgument(format!(
            "eigenvector count {p} outside 1..={c}"
        )));
    }
    if !s.is_finite() || !q.is_finite() {
        return Err(Error::Degenerate("non-finite covariance entries".into()));
    }

    let s = s.symmetrize();
    let mut q = q.symmetrize();
    let mean_diag = q.trace() / c as f64;
    if !(mean_diag > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let (q_vals, _) = symmetric_eigen(&q)?;
    let mut ridge = 0.0;
    if q_vals[c - 1] < 1e-10 * mean_diag {
        ridge = 1e-8 * mean_diag;
        for i in 0..c {
            q[(i, i)] += ridge;
        }
    }

    let l = cholesky(&q)?;
    // M = L⁻¹ S L⁻ᵀ, using the symmetry of S for the second solve.
    let half = solve_lower(&l, &s);
    let m = solve_lower(&l, &half.transpose()).symmetrize();
    let (vals, vecs) = symmetric_eigen(&m)?;

    let mut w = solve_lower_transposed(&l, &vecs.leading_columns(p));
    for j in 0..p {
        let mut col = w.column(j);
        normalize_sign(&mut col);
        w.set_column(j, &col);
    }
    Ok(GevdResult {
        eigenvalues: vals[..p].to_vec(),
        eigenvectors: w,
        ridge,
    })
}

/// Scales to unit norm and flips so the largest-magnitude entry is positive.
/// Near-ties (within 1e-9 relative) resolve to the lowest index.
pub(crate) fn normalize_sign(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    if pivot_negative(v) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Whether the largest-magnitude entry (lowest index on near-ties) is negative.
pub(crate) fn pivot_negative(v: &[f64]) -> bool {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    v.iter()
        .find(|x| x.abs() >= max * (1.0 - 1e-9))
        .is_some_and(|&x| x < 0.0)
}
