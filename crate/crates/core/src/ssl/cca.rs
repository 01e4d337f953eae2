use nalgebra::{DMatrix, SymmetricEigen};

use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};

/// Default covariance regularization.
pub const DEFAULT_REGULARIZATION: f64 = 1e-6;

fn centered(m: &FeatureMatrix) -> DMatrix<f64> {
    let (n, p) = (m.num_frames, m.dim);
    let mut out = DMatrix::from_row_slice(n, p, &m.data);
    for j in 0..p {
        let mean = out.column(j).sum() / n as f64;
        out.column_mut(j).add_scalar_mut(-mean);
    }
    out
}

/// `(S + reg I)^{-1/2}` of a symmetric covariance.
fn inverse_sqrt(cov: DMatrix<f64>, reg: f64) -> Result<DMatrix<f64>> {
    let p = cov.nrows();
    let eig = SymmetricEigen::new(cov + DMatrix::identity(p, p) * reg);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > max * 1e-12) || !(max > 0.0) {
        return Err(Error::numeric(
            "covariance is rank deficient; use a regularization value > 0",
        ));
    }
    let inv: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(inv));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Canonical correlations between the rows of `x` (`n x p`) and `y`
/// (`n x q`), descending, clipped to `[0, 1]`; `min(p, q)` values.
pub fn cca_corrs(x: &FeatureMatrix, y: &FeatureMatrix, reg: f64) -> Result<Vec<f64>> {
    let n = x.num_frames;
    if y.num_frames != n {
        return Err(Error::usage(format!(
            "X has {n} rows but Y has {}",
            y.num_frames
        )));
    }
    if n <= x.dim.max(y.dim) + 1 {
        return Err(Error::usage(format!(
            "CCA needs more than {} rows, got {n}",
            x.dim.max(y.dim) + 1
        )));
    }
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::usage("regularization must be finite and >= 0"));
    }
    let xc = centered(x);
    let yc = centered(y);
    let scale = 1.0 / (n as f64 - 1.0);
    let sxx = xc.transpose() * &xc * scale;
    let syy = yc.transpose() * &yc * scale;
    let sxy = xc.transpose() * &yc * scale;
    let m = inverse_sqrt(sxx, reg)? * sxy * inverse_sqrt(syy, reg)?;
    let mut corrs: Vec<f64> = m
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect();
    corrs.sort_by(|a, b| b.total_cmp(a));
    corrs.truncate(x.dim.min(y.dim));
    Ok(corrs)
}

/// Mean canonical correlation.
pub fn cca_similarity(corrs: &[f64]) -> f64 {
    corrs.iter().sum::<f64>() / corrs.len() as f64
}
