//! Small dense helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `m - m^T`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Cholesky factor of a symmetric positive-definite matrix.
///
/// On failure the matrix is symmetrized and `1e-10 * mean(diag)` is added to the
/// diagonal once before giving up with a conditioning error.
pub fn spd_cholesky(m: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let n = m.nrows();
    let mut fixed = symmetrize(m);
    let jitter = 1e-10 * fixed.diagonal().mean().abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        fixed[(i, i)] += jitter;
    }
    Cholesky::new(fixed).ok_or_else(|| Error::Conditioning {
        context: context.to_string(),
        min_eigenvalue: min_eigenvalue(m),
    })
}

pub fn spd_inverse(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    Ok(symmetrize(&spd_cholesky(m, context)?.inverse()))
}

/// Inverse of a lower-triangular matrix with a nonzero diagonal.
pub fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut id = DMatrix::<f64>::identity(n, n);
    l.solve_lower_triangular_mut(&mut id);
    id
}
