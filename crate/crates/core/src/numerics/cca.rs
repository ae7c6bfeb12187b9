use serde::{Deserialize, Serialize};

use super::decomp::{svd, thin_qr};
use super::gevd::pivot_negative;
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Singular directions below this fraction of the largest are dropped.
const RANK_TOL: f64 = 1e-10;

/// Canonical correlation analysis of two column sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaResult {
    /// `p×d`; `(A − mean)·coeffs_a` has unit-variance columns.
    pub coeffs_a: Matrix,
    /// `q×d`
    pub coeffs_b: Matrix,
    /// Descending, within [0, 1].
    pub correlations: Vec<f64>,
}

/// A centered block reduced to an orthonormal basis, plus the map taking
/// the block onto that basis. Reusable across many CCA calls that share one
/// side.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitened {
    basis: Matrix,
    map: Matrix,
}

impl Whitened {
    /// Validates and whitens `block` (T×p).
    pub fn new(block: &Matrix) -> Result<Whitened> {
        if block.rows() <= block.cols() {
            return Err(Error::InvalidArgument(format!(
                "cca needs more rows ({}) than columns ({})",
                block.rows(),
                block.cols()
            )));
        }
        if !block.is_finite() {
            return Err(Error::Degenerate("non-finite cca input".into()));
        }
        let (q, r) = thin_qr(&block.center_columns());
        let (ur, sr, vr) = svd(&r)?;
        let smax = sr[0];
        if !(smax > 0.0) {
            return Err(Error::Degenerate(
                "canonical correlation input has rank zero".into(),
            ));
        }
        let rank = sr.iter().take_while(|&&s| s > RANK_TOL * smax).count();
        let basis = q.matmul(&ur.leading_columns(rank));
        let map = Matrix::from_fn(vr.rows(), rank, |i, j| vr[(i, j)] / sr[j]);
        Ok(Whitened { basis, map })
    }

    pub fn rows(&self) -> usize {
        self.basis.rows()
    }
}

/// Canonical coefficients and correlations between the columns of `a`
/// (T×p) and `b` (T×q). Columns are centered internally.
pub fn cca(a: &Matrix, b: &Matrix) -> Result<CcaResult> {
    if b.rows() != a.rows() {
        return Err(Error::Shape(format!(
            "cca inputs have {} and {} rows",
            a.rows(),
            b.rows()
        )));
    }
    if a.rows() <= a.cols().max(b.cols()) {
        return Err(Error::InvalidArgument(format!(
            "cca needs more rows ({}) than columns ({})",
            a.rows(),
            a.cols().max(b.cols())
        )));
    }
    cca_whitened(&Whitened::new(a)?, &Whitened::new(b)?)
}

/// CCA from pre-whitened sides.
pub fn cca_whitened(wa: &Whitened, wb: &Whitened) -> Result<CcaResult> {
    let t = wa.rows();
    if wb.rows() != t {
        return Err(Error::Shape(format!(
            "cca inputs have {t} and {} rows",
            wb.rows()
        )));
    }
    let cross = wa.basis.tr_matmul(&wb.basis);

    let (left, corr, right) = if cross.rows() >= cross.cols() {
        let (u, s, v) = svd(&cross)?;
        (u, s, v)
    } else {
        let (u, s, v) = svd(&cross.transpose())?;
        (v, s, u)
    };
    let d = corr.len().min(left.cols()).min(right.cols());
    let scale = ((t - 1) as f64).sqrt();
    let mut coeffs_a = wa.map.matmul(&left.leading_columns(d)).scale(scale);
    let mut coeffs_b = wb.map.matmul(&right.leading_columns(d)).scale(scale);

    // Sign convention on the `a` side; `b` follows so correlations stay positive.
    for j in 0..d {
        if pivot_negative(&coeffs_a.column(j)) {
            for i in 0..coeffs_a.rows() {
                coeffs_a[(i, j)] = -coeffs_a[(i, j)];
            }
            for i in 0..coeffs_b.rows() {
                coeffs_b[(i, j)] = -coeffs_b[(i, j)];
            }
        }
    }

    Ok(CcaResult {
        coeffs_a,
        coeffs_b,
        correlations: corr[..d].iter().map(|c| c.clamp(0.0, 1.0)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::pearson;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn identical_sets_fully_correlated() {
        let a = noise(50, 3, 1);
        let r = cca(&a, &a).unwrap();
        assert_eq!(r.correlations.len(), 3);
        for c in r.correlations {
            assert!((c - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn invariant_under_invertible_map() {
        let a = noise(80, 3, 2);
        let m = Matrix::from_rows(&[[2.0, 0.5, 0.0], [0.1, -1.0, 0.3], [0.0, 0.2, 4.0]]).unwrap();
        let r = cca(&a, &a.matmul(&m)).unwrap();
        for c in r.correlations {
            assert!((c - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn independent_noise_low_correlation() {
        let a = noise(10_000, 2, 3);
        let b = noise(10_000, 2, 4);
        let r = cca(&a, &b).unwrap();
        assert!(
            r.correlations.iter().all(|&c| c < 0.05),
            "{:?}",
            r.correlations
        );
    }

    #[test]
    fn projection_identity() {
        let a = noise(120, 3, 5);
        let b = a.matmul(&noise(3, 2, 6)).add(&noise(120, 2, 7));
        let r = cca(&a, &b).unwrap();
        let pa = a.center_columns().matmul(&r.coeffs_a);
        let pb = b.center_columns().matmul(&r.coeffs_b);
        for (j, &rho) in r.correlations.iter().enumerate() {
            let got = pearson(&pa.column(j), &pb.column(j)).unwrap();
            assert!((got - rho).abs() < 1e-8, "{got} vs {rho}");
        }
    }

    #[test]
    fn rank_deficient_input_drops_directions() {
        let mut a = noise(40, 3, 8);
        for i in 0..40 {
            a[(i, 2)] = 2.0 * a[(i, 0)] - a[(i, 1)];
        }
        let b = noise(40, 3, 9);
        let r = cca(&a, &b).unwrap();
        assert_eq!(r.correlations.len(), 2);
        assert_eq!(r.coeffs_a.shape(), (3, 2));
    }

    #[test]
    fn rank_zero_is_an_error() {
        let a = Matrix::from_fn(20, 2, |_, j| j as f64);
        let b = noise(20, 2, 10);
        assert!(matches!(cca(&a, &b), Err(Error::Degenerate(_))));
    }

    #[test]
    fn too_few_rows() {
        let a = noise(3, 3, 11);
        assert!(cca(&a, &a).is_err());
    }
}
