//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Reciprocal condition number below which a linear system counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let eig = m.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, eig.eigenvectors.column(i).into_owned()))
        .collect();
    // Stable sort keeps nalgebra's output order among exactly equal eigenvalues.
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pairs
}

/// Column mean and the matrix with it subtracted from every column.
pub fn center_columns(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let m = x.ncols();
    let mean = x.column_sum() / m as f64;
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    (centered, mean)
}

/// Solves `m * x = rhs` for symmetric positive definite `m`.
///
/// Uses a Cholesky factorization, falling back to a spectral solve when the
/// factorization fails; errors when the reciprocal condition number of `m`
/// is below [`SINGULAR_RCOND`].
pub fn solve_spd(
    m: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    context: &'static str,
) -> Result<DMatrix<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    let pairs = sym_eigen_desc(m);
    let amax = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let amin = pairs.iter().map(|p| p.0.abs()).fold(f64::INFINITY, f64::min);
    let rcond = if amax > 0.0 { amin / amax } else { 0.0 };
    if !(rcond >= SINGULAR_RCOND) {
        return Err(Error::SingularSystem { context, rcond });
    }
    let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
    for (value, vector) in &pairs {
        out += vector * (vector.transpose() * rhs) / *value;
    }
    Ok(out)
}

/// Vector right-hand-side variant of [`solve_spd`].
pub fn solve_spd_vec(
    m: &DMatrix<f64>,
    rhs: &DVector<f64>,
    context: &'static str,
) -> Result<DVector<f64>> {
    let cols = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let sol = solve_spd(m, &cols, context)?;
    Ok(DVector::from_column_slice(sol.as_slice()))
}

/// Minimizes `||x - r * t||_F` over `r`.
///
/// Overdetermined full-rank designs go through a Householder QR of the tall
/// transpose `t^T = q u`, which stays backward stable regardless of
/// conditioning; nalgebra's SVD can silently lose several digits in its
/// factors even on benign tall inputs, which is fatal here because the
/// alternating solver relies on each coefficient solve being optimal.
/// Underdetermined or rank-deficient designs fall back to the minimum-norm
/// solution `x t^T (t t^T)^+` with the Gram pseudo-inverse truncated below
/// `max_eig * eps * max(nrows, ncols)`.
pub fn least_squares_coefficients(x: &DMatrix<f64>, t: &DMatrix<f64>) -> DMatrix<f64> {
    if t.ncols() >= t.nrows() {
        let qr = t.transpose().qr();
        let u = qr.r();
        let tol = u.diagonal().amax() * f64::EPSILON * t.nrows().max(t.ncols()) as f64;
        if (0..u.nrows()).all(|i| u[(i, i)].abs() > tol) {
            let qtx = qr.q().transpose() * x.transpose();
            if let Some(w) = u.solve_upper_triangular(&qtx) {
                return w.transpose();
            }
        }
    }
    let gram = t * t.transpose();
    let pairs = sym_eigen_desc(&gram);
    let max_eig = pairs.first().map(|p| p.0).unwrap_or(0.0);
    let tol = max_eig * f64::EPSILON * t.nrows().max(t.ncols()) as f64;
    let mut pinv = DMatrix::zeros(gram.nrows(), gram.ncols());
    for (value, vector) in &pairs {
        if *value > tol {
            pinv += vector * vector.transpose() / *value;
        }
    }
    x * (t.transpose() * pinv)
}

fn singular_values_tall(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    if m.nrows() >= m.ncols() {
        m.clone().svd(false, false).singular_values
    } else {
        m.transpose().svd(false, false).singular_values
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_values_tall(m).max()
}

/// Smallest singular value.
pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_values_tall(m).min()
}
